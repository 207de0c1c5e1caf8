#pragma once

#include <cstdint>

#include "semalign/autodiff.hpp"
#include "semalign/kernels.hpp"
#include "semalign/matrix.hpp"

namespace semalign {

/// Settings for the semantic density distribution loss.
struct SddConfig {
    double bandwidth = 1.0;        // b in the KDE exponent
    bool relative_distance = true; // divide squared distances by the batch variance
    enum class Divergence { Kl, Mse };
    Divergence divergence = Divergence::Kl;
    double sigma_floor = 1e-8;  // guards the variance division when a batch collapses
    double prob_floor = 1e-30;  // floors density ratios before logarithms
    bool detach_sigma = false;       // stop gradient through sigma(T)
    bool detach_normalizer = false;  // stop gradient through sum_j kappa(t_j, .)

    void validate() const;
};

/// Mixing weights of the total objective:
/// alpha * L_GC + delta * L_MKMMD + eta * L_SDD, with mu weighting the
/// self-supervised terms inside L_GC.
struct LossWeights {
    double alpha = 1.0;
    double delta = 0.1;
    double eta = 1.0;
    double mu = 0.1;

    void validate() const;
};

/// Which rows enter the self-supervised softmax denominator. Batch: all
/// original batch rows including self, positive excluded. Simclr is the
/// conventional alternative (self excluded, positive included).
enum class SslDenominator { Batch, Simclr };

// --- tape-based loss graphs -------------------------------------------------

/// Biased V-statistic MMD with a learned kernel combination:
/// mean(Kuu) + mean(Kvv) - 2 mean(Kuv), means over all B^2 entries.
/// The unbiased U-statistic variant (off by default) drops diagonal terms.
Var mkmmd_loss(Tape& t, const std::vector<KernelSpec>& specs, Var beta_logits, Var u, Var v,
               bool unbiased = false);

/// Column of densities kappa(x_i, S) for every row x_i of `eval_points`:
/// [sum_j exp(-||x - s_j||^2 / (b^2 sigma~))] / (2 B b^2 pi), where sigma~ is
/// the (floored) variance of the sample batch under relative distance and 1
/// otherwise.
Var kappa_profile(Tape& t, Var eval_points, Var sample_points, const SddConfig& cfg);

/// Divergence between the normalized density profiles of T and R evaluated at
/// T's points. KL mode: sum_i p_i log(p_i / q_i). MSE mode: sum_i (p_i-q_i)^2.
Var gamma_divergence(Tape& t, Var t_batch, Var r_batch, const SddConfig& cfg);

/// Symmetrized divergence: (Gamma(U,V) + Gamma(V,U)) / 2.
Var sdd_loss(Tape& t, Var u, Var v, const SddConfig& cfg);

/// Symmetric InfoNCE over cosine similarities of row-aligned pairs, averaged
/// with the 1/(2n) factor. n == 0 legally yields a constant zero.
Var clip_contrastive_loss(Tape& t, Var u, Var v, Var tau);

/// Self-supervised contrastive loss; z_pos row i is the augmented view of
/// z row i.
Var ssl_loss(Tape& t, Var z, Var z_pos, Var tau, SslDenominator den = SslDenominator::Batch);

/// L_CL + mu * L_SSL-U + mu * L_SSL-V from already-built scalar nodes.
Var gc_loss(Tape& t, Var cl, Var ssl_u, Var ssl_v, double mu);

/// The full objective with per-component nodes kept for logging.
struct TotalLossGraph {
    Var total;
    Var cl;
    Var ssl_u;
    Var ssl_v;
    Var mkmmd;
    Var sdd;
    bool empty_paired_warning = false;
};

/// u, v are full-batch embeddings with the paired rows first; u_pos/v_pos are
/// embeddings of augmented inputs (pass invalid Vars to skip the SSL terms).
/// Components with zero effective weight are not built.
TotalLossGraph total_loss(Tape& t, Var u, Var v, int n_paired, Var u_pos, Var v_pos, Var tau,
                          Var beta_logits, const std::vector<KernelSpec>& specs,
                          const LossWeights& weights, const SddConfig& sdd_cfg, bool use_cl = true,
                          bool mmd_unbiased = false,
                          SslDenominator den = SslDenominator::Batch);

// --- value-only convenience wrappers (build a throwaway tape) ---------------

double mkmmd_loss(const MultiKernel& mk, const Matrix& u, const Matrix& v, bool unbiased = false);

/// kappa(x, T) for a single 1 x K row x.
double kde_density(const Matrix& x, const Matrix& t, const SddConfig& cfg);

double gamma_divergence(const Matrix& t_batch, const Matrix& r_batch, const SddConfig& cfg);
double sdd_loss(const Matrix& u, const Matrix& v, const SddConfig& cfg);
double clip_contrastive_loss(const Matrix& u, const Matrix& v, double tau,
                             bool* empty_warning = nullptr);
double ssl_loss(const Matrix& z, const Matrix& z_pos, double tau,
                SslDenominator den = SslDenominator::Batch);
double gc_loss(double cl, double ssl_u, double ssl_v, double mu);

// --- instrumentation ---------------------------------------------------------

/// Number of KDE kernel evaluations (exponent terms) performed by
/// kappa_profile on this thread since the last reset. Used to verify the
/// O(B^2) cost of the density loss.
std::uint64_t sdd_kernel_eval_count();
void reset_sdd_kernel_eval_count();

} // namespace semalign
