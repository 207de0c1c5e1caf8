#include "semalign/kernels.hpp"

#include <cmath>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

KernelSpec KernelSpec::gaussian(double gamma_sq) {
    KernelSpec s;
    s.family = Family::Gaussian;
    s.gamma_sq = gamma_sq;
    s.validate();
    return s;
}

KernelSpec KernelSpec::polynomial(double coef0, int degree) {
    KernelSpec s;
    s.family = Family::Polynomial;
    s.coef0 = coef0;
    s.degree = degree;
    s.validate();
    return s;
}

void KernelSpec::validate() const {
    if (family == Family::Gaussian && !(gamma_sq > 0.0)) {
        throw ValueError("KernelSpec: gamma_sq must be > 0, got " + std::to_string(gamma_sq));
    }
    if (family == Family::Polynomial && degree < 1) {
        throw ValueError("KernelSpec: degree must be >= 1, got " + std::to_string(degree));
    }
}

std::vector<double> MultiKernel::betas() const {
    validate();
    double mx = beta_logits[0];
    for (double l : beta_logits) mx = std::max(mx, l);
    std::vector<double> out(beta_logits.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(beta_logits[i] - mx);
        denom += out[i];
    }
    for (double& b : out) b /= denom;
    return out;
}

void MultiKernel::validate() const {
    if (specs.empty()) throw ValueError("MultiKernel: needs at least one kernel");
    if (specs.size() != beta_logits.size()) {
        throw ValueError("MultiKernel: " + std::to_string(specs.size()) + " specs but " +
                         std::to_string(beta_logits.size()) + " logits");
    }
    for (const KernelSpec& s : specs) s.validate();
}

Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
    spec.validate();
    if (a.cols() != b.cols()) throw DimensionError("gram: column mismatch");
    if (spec.family == KernelSpec::Family::Gaussian) {
        Matrix d = pairwise_sq_dists(a, b);
        for (double& v : d.data()) v = std::exp(-v / (2.0 * spec.gamma_sq));
        return d;
    }
    Matrix g = matmul(a, transpose(b));
    for (double& v : g.data()) {
        double base = v + spec.coef0;
        double acc = base;
        for (int k = 1; k < spec.degree; ++k) acc *= base;
        v = acc;
    }
    return g;
}

Matrix multi_gram(const MultiKernel& mk, const Matrix& a, const Matrix& b) {
    std::vector<double> beta = mk.betas();
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < mk.specs.size(); ++i) {
        Matrix g = gram(mk.specs[i], a, b);
        for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += beta[i] * g.data()[k];
    }
    return out;
}

Var gram(Tape& t, const KernelSpec& spec, Var a, Var b) {
    spec.validate();
    if (spec.family == KernelSpec::Family::Gaussian) {
        Var d = t.pairwise_sq_dists(a, b);
        return t.exp(t.scale(d, -1.0 / (2.0 * spec.gamma_sq)));
    }
    Var g = t.matmul(a, t.transpose(b));
    return t.pow_int(t.add_const(g, spec.coef0), spec.degree);
}

Var multi_gram(Tape& t, const std::vector<KernelSpec>& specs, Var beta_logits, Var a, Var b) {
    if (specs.empty()) throw ValueError("multi_gram: needs at least one kernel");
    const Matrix& logits = t.value(beta_logits);
    if (logits.rows() != 1 || logits.cols() != static_cast<int>(specs.size())) {
        throw DimensionError("multi_gram: beta_logits must be 1x" + std::to_string(specs.size()));
    }
    Var beta = t.row_softmax(beta_logits);
    Var acc{};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        Var term = t.mul_scalar(gram(t, specs[i], a, b), t.entry(beta, 0, static_cast<int>(i)));
        acc = i == 0 ? term : t.add(acc, term);
    }
    return acc;
}

} // namespace semalign
