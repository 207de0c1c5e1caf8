#include "semalign/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "semalign/losses.hpp"
#include "semalign/matrix.hpp"
#include "semalign/rng.hpp"

namespace semalign {

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

/// Frobenius-norm relative error between the reverse-mode and FD gradients.
double grad_rel_error(const Matrix& ad, const Matrix& fd) {
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        double d = ad.data()[i] - fd.data()[i];
        diff += d * d;
        ref += fd.data()[i] * fd.data()[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
}

double check_loss_gradient(const std::function<Var(Tape&, Var, Var)>& build, const Matrix& u0,
                           const Matrix& v0, bool inject_fault) {
    Param pu("u", u0);
    Param pv("v", v0);
    Tape t;
    Var loss = build(t, t.leaf(pu), t.leaf(pv));
    value_and_grad(t, loss, {&pu, &pv});
    if (inject_fault) pu.grad(0, 0) += 1e-3;

    auto loss_at = [&](const Matrix& u, const Matrix& v) {
        Tape tt;
        return tt.scalar_value(build(tt, tt.constant(u), tt.constant(v)));
    };
    Matrix fd_u = finite_diff_grad([&](const Matrix& u) { return loss_at(u, v0); }, u0);
    Matrix fd_v = finite_diff_grad([&](const Matrix& v) { return loss_at(u0, v); }, v0);
    return std::max(grad_rel_error(pu.grad, fd_u), grad_rel_error(pv.grad, fd_v));
}

} // namespace

bool SelfcheckReport::all_pass() const {
    for (const CheckResult& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

SelfcheckReport run_selfcheck(bool inject_gradient_fault) {
    SelfcheckReport report;
    auto add = [&](const std::string& name, double measured, double tol) {
        report.checks.push_back({name, measured, tol, measured <= tol});
    };

    std::vector<KernelSpec> specs = {KernelSpec::gaussian(1.5), KernelSpec::polynomial(1.0, 2)};
    SddConfig sdd_kl;
    SddConfig sdd_mse;
    sdd_mse.divergence = SddConfig::Divergence::Mse;
    SddConfig sdd_abs;
    sdd_abs.relative_distance = false;

    // gradient vs central finite differences, three seeds each
    struct NamedBuild {
        const char* name;
        std::function<Var(Tape&, Var, Var)> build;
    };
    std::vector<NamedBuild> builds;
    builds.push_back({"grad mkmmd vs fd", [&](Tape& t, Var u, Var v) {
                          Var beta = t.constant(Matrix::constant(1, 2, 0.3));
                          return mkmmd_loss(t, specs, beta, u, v);
                      }});
    builds.push_back({"grad sdd rd/kl vs fd",
                      [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, sdd_kl); }});
    builds.push_back({"grad sdd rd/mse vs fd",
                      [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, sdd_mse); }});
    builds.push_back({"grad sdd abs/kl vs fd",
                      [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, sdd_abs); }});
    builds.push_back({"grad cl vs fd", [&](Tape& t, Var u, Var v) {
                          return clip_contrastive_loss(t, u, v, t.constant_scalar(0.2));
                      }});
    builds.push_back({"grad ssl vs fd", [&](Tape& t, Var u, Var v) {
                          return ssl_loss(t, u, v, t.constant_scalar(0.2));
                      }});

    bool fault_pending = inject_gradient_fault;
    for (const NamedBuild& nb : builds) {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Rng rng(mix_seed(0x5e1fc43cULL, seed));
            Matrix u = random_matrix(6, 3, rng);
            Matrix v = random_matrix(6, 3, rng);
            worst = std::max(worst, check_loss_gradient(nb.build, u, v, fault_pending));
            fault_pending = false;
        }
        add(nb.name, worst, 1e-5);
    }

    // kde brute force: kappa against a scalar loop
    {
        Rng rng(0x6b6465ULL);
        Matrix x = random_matrix(1, 2, rng);
        Matrix tp = random_matrix(5, 2, rng);
        SddConfig cfg;
        cfg.bandwidth = 0.7;
        double got = kde_density(x, tp, cfg);
        double sigma = std::max(batch_variance(tp), cfg.sigma_floor);
        double b2 = cfg.bandwidth * cfg.bandwidth;
        double acc = 0.0;
        for (int i = 0; i < tp.rows(); ++i) {
            double d = 0.0;
            for (int k = 0; k < tp.cols(); ++k) {
                double diff = x(0, k) - tp(i, k);
                d += diff * diff;
            }
            acc += std::exp(-d / (b2 * sigma));
        }
        double want = acc / (2.0 * tp.rows() * b2 * std::numbers::pi);
        add("kde vs scalar oracle", std::abs(got - want), 1e-12);
    }

    // mmd brute force: expanded double sum over both kernels
    {
        Rng rng(0x6d6d64ULL);
        Matrix u = random_matrix(6, 3, rng);
        Matrix v = random_matrix(6, 3, rng);
        MultiKernel mk;
        mk.specs = specs;
        mk.beta_logits = {0.2, -0.4};
        double got = mkmmd_loss(mk, u, v);
        std::vector<double> beta = mk.betas();
        auto kval = [&](const Matrix& a, int i, const Matrix& b, int j) {
            double d = 0.0;
            double dot = 0.0;
            for (int k = 0; k < a.cols(); ++k) {
                double diff = a(i, k) - b(j, k);
                d += diff * diff;
                dot += a(i, k) * b(j, k);
            }
            double g = std::exp(-d / (2.0 * specs[0].gamma_sq));
            double p = std::pow(dot + specs[1].coef0, specs[1].degree);
            return beta[0] * g + beta[1] * p;
        };
        double uu = 0.0;
        double vv = 0.0;
        double uv = 0.0;
        int b = u.rows();
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j) {
                uu += kval(u, i, u, j);
                vv += kval(v, i, v, j);
                uv += kval(u, i, v, j);
            }
        double want = uu / (b * b) + vv / (b * b) - 2.0 * uv / (b * b);
        add("mkmmd vs double-sum oracle", std::abs(got - want), 1e-10);
    }

    // invariant battery
    {
        Rng rng(0x696e76ULL);
        double worst_self = 0.0;
        double worst_mmd = 0.0;
        double worst_kl = 0.0;
        double worst_sym = 0.0;
        double worst_shift = 0.0;
        MultiKernel mk;
        mk.specs = specs;
        mk.beta_logits = {0.0, 0.0};
        for (int rep = 0; rep < 100; ++rep) {
            Matrix u = random_matrix(6, 3, rng);
            Matrix v = random_matrix(6, 3, rng);
            worst_self = std::max(worst_self, std::abs(sdd_loss(u, u, sdd_kl)));
            worst_self = std::max(worst_self, std::abs(sdd_loss(u, u, sdd_mse)));
            worst_mmd = std::max(worst_mmd, std::abs(mkmmd_loss(mk, u, u)));
            worst_kl = std::max(worst_kl, -sdd_loss(u, v, sdd_kl));
            worst_sym =
                std::max(worst_sym, std::abs(sdd_loss(u, v, sdd_kl) - sdd_loss(v, u, sdd_kl)));
            Matrix shift = Matrix::constant(1, 3, rng.uniform(-3.0, 3.0));
            Matrix us = u;
            Matrix vs = v;
            for (int i = 0; i < us.rows(); ++i)
                for (int j = 0; j < us.cols(); ++j) {
                    us(i, j) += shift(0, j);
                    vs(i, j) += shift(0, j);
                }
            worst_shift = std::max(
                worst_shift, std::abs(sdd_loss(u, v, sdd_kl) - sdd_loss(us, vs, sdd_kl)));
        }
        add("sdd(U,U) == 0", worst_self, 0.0);
        add("mkmmd(U,U) <= 1e-12", worst_mmd, 1e-12);
        add("kl-mode sdd >= -1e-10", worst_kl, 1e-10);
        add("sdd symmetry", worst_sym, 1e-12);
        add("sdd translation invariance", worst_shift, 1e-9);
    }

    // numerics spot checks
    {
        Rng rng(0x6e756dULL);
        Matrix m = random_matrix(4, 5, rng, -700.0, 700.0);
        Matrix lse = logsumexp_rows(m);
        double worst = 0.0;
        for (int i = 0; i < m.rows(); ++i) {
            double mx = m(i, 0);
            for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
            worst = std::max(worst, mx - lse(i, 0)); // lse must be >= row max
        }
        add("logsumexp >= row max", worst, 0.0);

        Matrix a = random_matrix(5, 4, rng);
        Matrix cos = cosine_similarity_matrix(a, a);
        double range = 0.0;
        for (double vv : cos.data()) range = std::max(range, std::abs(vv) - 1.0);
        add("cosine entries within [-1, 1]", range, 1e-9);
    }

    return report;
}

std::string format_report(const SelfcheckReport& report) {
    std::ostringstream os;
    for (const CheckResult& c : report.checks) {
        os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": measured " << c.measured
           << " vs tolerance " << c.tolerance << "\n";
    }
    os << (report.all_pass() ? "selfcheck: all checks passed" : "selfcheck: FAILURES detected")
       << "\n";
    return os.str();
}

} // namespace semalign
