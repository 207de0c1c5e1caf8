#include "semalign/model.hpp"

#include <cmath>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ValueError("MlpSpec: needs at least input and output widths");
    for (int w : widths) {
        if (w < 1) throw ValueError("MlpSpec: widths must be positive");
    }
}

void StreamSpec::validate() const {
    encoder.validate();
    head.validate();
    if (encoder.output_dim() != head.input_dim()) {
        throw DimensionError("StreamSpec: encoder output " + std::to_string(encoder.output_dim()) +
                             " does not feed head input " + std::to_string(head.input_dim()));
    }
}

Var Mlp::forward(Tape& t, Var x) {
    if (t.value(x).cols() != spec.input_dim()) {
        throw DimensionError("Mlp::forward: input width " + std::to_string(t.value(x).cols()) +
                             ", expected " + std::to_string(spec.input_dim()));
    }
    Var h = x;
    for (std::size_t layer = 0; layer < weights.size(); ++layer) {
        h = t.add_rowvec(t.matmul(h, t.leaf(weights[layer])), t.leaf(biases[layer]));
        if (layer + 1 < weights.size() || spec.activate_output) {
            h = spec.activation == MlpSpec::Activation::Tanh ? t.tanh(h) : t.relu(h);
        }
    }
    return h;
}

Matrix Mlp::forward(const Matrix& x) const {
    if (x.cols() != spec.input_dim()) {
        throw DimensionError("Mlp::forward: input width " + std::to_string(x.cols()) +
                             ", expected " + std::to_string(spec.input_dim()));
    }
    Matrix h = x;
    for (std::size_t layer = 0; layer < weights.size(); ++layer) {
        h = matmul(h, weights[layer].value);
        const Matrix& b = biases[layer].value;
        for (int i = 0; i < h.rows(); ++i)
            for (int j = 0; j < h.cols(); ++j) h(i, j) += b(0, j);
        if (layer + 1 < weights.size() || spec.activate_output) {
            for (double& v : h.data()) {
                v = spec.activation == MlpSpec::Activation::Tanh ? std::tanh(v)
                                                                 : (v > 0.0 ? v : 0.0);
            }
        }
    }
    return h;
}

std::vector<Param*> Mlp::params() {
    std::vector<Param*> out;
    for (Param& w : weights) out.push_back(&w);
    for (Param& b : biases) out.push_back(&b);
    return out;
}

std::vector<const Param*> Mlp::params() const {
    std::vector<const Param*> out;
    for (const Param& w : weights) out.push_back(&w);
    for (const Param& b : biases) out.push_back(&b);
    return out;
}

namespace {

Mlp make_mlp(const MlpSpec& spec, const std::string& name, Rng rng) {
    spec.validate();
    Mlp mlp;
    mlp.spec = spec;
    for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
        int fan_in = spec.widths[layer];
        int fan_out = spec.widths[layer + 1];
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Rng layer_rng = rng.derive(layer);
        Matrix w(fan_in, fan_out);
        for (double& v : w.data()) v = layer_rng.uniform(-bound, bound);
        mlp.weights.emplace_back(name + ".w" + std::to_string(layer), std::move(w));
        mlp.biases.emplace_back(name + ".b" + std::to_string(layer), Matrix(1, fan_out));
    }
    return mlp;
}

} // namespace

TwoStreamModel TwoStreamModel::init(const StreamSpec& a, const StreamSpec& b, std::uint64_t seed) {
    a.validate();
    b.validate();
    if (a.head.output_dim() != b.head.output_dim()) {
        throw DimensionError("TwoStreamModel: heads must share the latent width");
    }
    Rng root(seed);
    TwoStreamModel m;
    m.spec_a = a;
    m.spec_b = b;
    m.encoder_a = make_mlp(a.encoder, "enc_a", root.derive(1));
    m.head_a = make_mlp(a.head, "head_a", root.derive(2));
    m.encoder_b = make_mlp(b.encoder, "enc_b", root.derive(3));
    m.head_b = make_mlp(b.head, "head_b", root.derive(4));
    m.tau_log = Param("tau_log", Matrix::constant(1, 1, std::log(kTauInit)));
    return m;
}

std::pair<Var, Var> TwoStreamModel::forward(Tape& t, Var x_a, Var x_b) {
    Var u = head_a.forward(t, encoder_a.forward(t, x_a));
    Var v = head_b.forward(t, encoder_b.forward(t, x_b));
    return {u, v};
}

std::pair<Matrix, Matrix> TwoStreamModel::forward(const Matrix& x_a, const Matrix& x_b) const {
    return {head_a.forward(encoder_a.forward(x_a)), head_b.forward(encoder_b.forward(x_b))};
}

Var TwoStreamModel::tau_node(Tape& t) {
    return t.exp(t.clamp(t.leaf(tau_log), std::log(kTauMin), std::log(kTauMax)));
}

std::vector<Param*> TwoStreamModel::params() {
    std::vector<Param*> out;
    for (Mlp* mlp : {&encoder_a, &head_a, &encoder_b, &head_b}) {
        for (Param* p : mlp->params()) out.push_back(p);
    }
    out.push_back(&tau_log);
    return out;
}

std::vector<const Param*> TwoStreamModel::params() const {
    std::vector<const Param*> out;
    for (const Mlp* mlp : {&encoder_a, &head_a, &encoder_b, &head_b}) {
        for (const Param* p : mlp->params()) out.push_back(p);
    }
    out.push_back(&tau_log);
    return out;
}

Matrix augment(const Matrix& x, double strength, Rng& rng) {
    if (strength < 0.0) throw ValueError("augment: strength must be >= 0");
    if (strength == 0.0 || x.rows() < 2) return x;

    Matrix mean = mean_row(x);
    std::vector<double> col_std(static_cast<std::size_t>(x.cols()), 0.0);
    for (int j = 0; j < x.cols(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < x.rows(); ++i) {
            double d = x(i, j) - mean(0, j);
            acc += d * d;
        }
        col_std[static_cast<std::size_t>(j)] = std::sqrt(acc / (x.rows() - 1));
    }
    Matrix out = x;
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j)
            out(i, j) += strength * col_std[static_cast<std::size_t>(j)] * rng.normal();
    return out;
}

} // namespace semalign
