#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semalign/data.hpp"
#include "semalign/kernels.hpp"
#include "semalign/losses.hpp"
#include "semalign/model.hpp"
#include "semalign/rng.hpp"

namespace semalign {

/// One composed training batch: n row-aligned pairs first, then independently
/// sampled unpaired rows, B rows per modality in total.
struct MultimodalBatch {
    Matrix paired_a;
    Matrix paired_b;
    Matrix unpaired_a;
    Matrix unpaired_b;
    bool replacement_warning = false; // a pool was smaller than the draw

    int paired_count() const { return paired_a.rows(); }
    int batch_size() const { return paired_a.rows() + unpaired_a.rows(); }
    Matrix full_a() const; // paired rows stacked over unpaired rows
    Matrix full_b() const;
};

/// A base kernel whose Gaussian bandwidth may be resolved per batch by the
/// median heuristic (gamma_sq = median pairwise squared distance of the
/// concatenated embeddings, no gradient flow).
struct KernelPlan {
    KernelSpec spec;
    bool gamma_from_median = false;
};

std::vector<KernelPlan> default_kernel_plans();

/// Resolve plans against concrete embeddings (median heuristic per batch).
std::vector<KernelSpec> resolve_kernels(const std::vector<KernelPlan>& plans, const Matrix& u,
                                        const Matrix& v);

struct TrainConfig {
    int batch_size = 64;
    int epochs = 50;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights weights;
    SddConfig sdd;
    std::vector<KernelPlan> kernels = default_kernel_plans();
    std::vector<double> beta_init; // logits; defaults to zeros (uniform betas)
    bool mmd_unbiased = false;
    SslDenominator ssl_denominator = SslDenominator::Batch;
    double augment_strength = 0.1;
    bool use_cl = true;
    bool use_unpaired = true;
    int eval_every = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

/// n = floor(N / (M + N) * B) matched pairs, remainder drawn independently
/// per modality from the unpaired pools. Draws are without replacement unless
/// a pool is too small, which sets the warning flag.
MultimodalBatch compose_batch(const Dataset& dataset, const TrainConfig& cfg, Rng& rng);

/// Adam with bias correction; state is per-parameter first/second moments.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    void init(const std::vector<Param*>& params);
    void step(const std::vector<Param*>& params, double lr);
};

struct MetricRecord {
    int epoch = 0;
    double l_cl = 0.0;
    double l_ssl_u = 0.0;
    double l_ssl_v = 0.0;
    double l_mkmmd = 0.0;
    double l_sdd = 0.0;
    double l_total = 0.0;
    double recall1_ab = 0.0;
    double recall5_ab = 0.0;
    double recall1_ba = 0.0;
    double recall5_ba = 0.0;

    bool operator==(const MetricRecord&) const = default;
};
using MetricHistory = std::vector<MetricRecord>;

void save_history(const MetricHistory& history, const std::string& path);
MetricHistory load_history(const std::string& path);

struct RetrievalMetrics {
    std::vector<int> ks;
    std::vector<double> recall_ab; // query u_i against all v_j
    std::vector<double> recall_ba;
};

/// Rows of u and v are ground-truth pairs. For each query, candidates rank by
/// cosine similarity, ties broken toward the lower index. recall@k counts the
/// true match within the top min(k, Q).
RetrievalMetrics evaluate_retrieval(const Matrix& u, const Matrix& v, const std::vector<int>& ks);

struct Checkpoint {
    TwoStreamModel model;
    Param beta_logits;
    AdamState opt;
    std::string rng_state;
    std::string config_hash;
    int epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TrainResult {
    MetricHistory history;
    Param beta_logits;
    AdamState opt;
    bool replacement_warning = false;
};

/// Optimize model parameters, tau, and the kernel weights against the total
/// objective. Evaluation records land at epoch 0, every `eval_every` epochs,
/// and the final epoch; checkpoints are written at those points when out_dir
/// is non-empty. Deterministic for a fixed (config, seed).
TrainResult train(const Dataset& dataset, TwoStreamModel& model, const TrainConfig& cfg,
                  const std::string& out_dir = "", const std::string& config_hash = "");

} // namespace semalign
