#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semalign/autodiff.hpp"
#include "semalign/matrix.hpp"
#include "semalign/rng.hpp"

namespace semalign {

struct MlpSpec {
    std::vector<int> widths; // input, hidden..., output
    enum class Activation { Tanh, Relu };
    Activation activation = Activation::Tanh; // hidden layers; output stays
                                              // linear unless activate_output
    bool activate_output = false; // set on encoders whose output is itself a
                                  // hidden feature layer of the full stream

    void validate() const;
    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
};

/// Fully connected network; weights stored input x output so a batch flows as
/// x * W + b.
struct Mlp {
    MlpSpec spec;
    std::vector<Param> weights;
    std::vector<Param> biases;

    /// Tape leaves bind to this network's Params so gradients accumulate
    /// into them; hence non-const.
    Var forward(Tape& t, Var x);
    Matrix forward(const Matrix& x) const;
    std::vector<Param*> params();
    std::vector<const Param*> params() const;
};

/// Encoder plus projection head for one modality.
struct StreamSpec {
    MlpSpec encoder;
    MlpSpec head;

    void validate() const;
};

/// Two independent streams into a shared latent space, plus the learnable
/// temperature (stored as log tau).
struct TwoStreamModel {
    StreamSpec spec_a;
    StreamSpec spec_b;
    Mlp encoder_a;
    Mlp head_a;
    Mlp encoder_b;
    Mlp head_b;
    Param tau_log; // 1x1

    static constexpr double kTauInit = 0.07;
    static constexpr double kTauMin = 0.01;
    static constexpr double kTauMax = 100.0;

    /// Glorot-style scaled-uniform weights, zero biases, tau = 0.07.
    /// Streams and layers draw from distinct derived seeds.
    static TwoStreamModel init(const StreamSpec& a, const StreamSpec& b, std::uint64_t seed);

    std::pair<Var, Var> forward(Tape& t, Var x_a, Var x_b);
    std::pair<Matrix, Matrix> forward(const Matrix& x_a, const Matrix& x_b) const;

    /// Clamped positive temperature node.
    Var tau_node(Tape& t);

    std::vector<Param*> params(); // every learnable tensor including tau_log
    std::vector<const Param*> params() const;
    int latent_dim() const { return spec_a.head.output_dim(); }
};

/// x + Gaussian noise with std = strength * per-column sample std of x.
/// strength 0 is the identity; a single-row batch has no spread and is
/// returned unchanged.
Matrix augment(const Matrix& x, double strength, Rng& rng);

} // namespace semalign
