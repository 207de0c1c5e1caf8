#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semalign/matrix.hpp"

namespace semalign {

/// Batch-representativeness study: how well two same-size batches drawn from
/// one distribution agree in their soft Parzen-window density profiles.

/// Column of densities for the appendix variant of kappa:
/// [sum_j exp(-||x - s_j||^2 / sigma(S))] / (B pi).
/// This deliberately differs from the loss-side kappa (no bandwidth, other
/// prefactor); the two formulas are distinct and must not be merged.
Matrix parzen_profile(const Matrix& eval_points, const Matrix& sample_points,
                      double sigma_floor = 1e-8);

/// D = (1/B) sum_i (k(t_i,T) - k(t_i,R))^2 + (1/B) sum_i (k(r_i,R) - k(r_i,T))^2.
/// Symmetric in (t, r), >= 0, and 0 iff the KDE profiles coincide at all
/// sample points.
double representativeness_gap(const Matrix& t, const Matrix& r, double sigma_floor = 1e-8);

struct SweepConfig {
    std::vector<int> sizes = {2, 4, 8, 16, 32, 64, 128, 256};
    std::vector<int> dims = {2, 16, 64};
    int trials = 50;
    std::uint64_t seed = 0;
    enum class Reference { Uniform, GaussianMixture };
    Reference reference = Reference::Uniform;
    double sigma_floor = 1e-8;

    void validate() const;
};

struct SweepRow {
    int size = 0;
    int dim = 0;
    double mean_d = 0.0;
    double std_d = 0.0;
    double normalized_d = 0.0; // mean_d relative to the smallest size at this dim
    int trials = 0;
};

/// For each (size, dim) draw `trials` independent batch pairs from the
/// reference distribution and average D. Rows sorted by size, then dim.
/// Trial seeds are derived per (size, dim, trial), so results do not depend
/// on execution order.
std::vector<SweepRow> sweep(const SweepConfig& cfg);

/// CSV with columns size, dim, mean_D, std_D, normalized_D and a leading
/// comment line recording trial count and reference.
std::string sweep_csv(const std::vector<SweepRow>& rows, const SweepConfig& cfg);

} // namespace semalign
