#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semalign/matrix.hpp"

namespace semalign {

/// Synthetic two-modality generator. Both modalities draw their semantics
/// from one shared Gaussian mixture, so the semantic distributions match by
/// construction; each modality then sees that semantic point through its own
/// random transform plus noise.
struct SyntheticSpec {
    int semantic_dim = 1; // low-dimensional semantics keep the density profile
                          // informative at batch scale; higher dims leave the
                          // distribution losses blind to rotations
    int clusters = 8;     // mixture components; weights ramp linearly so cluster
                          // masses are distinguishable across modalities
    int dim_a = 24;
    int dim_b = 32;
    enum class Map { Identity, Linear, TanhWarped };
    Map map_a = Map::Linear;
    Map map_b = Map::TanhWarped;
    double noise_std = 0.02;
    int pairs = 100;      // N matched pairs
    int unpaired_a = 900; // M1
    int unpaired_b = 900; // M2
    int test_pairs = 200; // held-out true pairs
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const SyntheticSpec&) const = default;
};

struct Dataset {
    SyntheticSpec spec;
    Matrix paired_a;
    Matrix paired_b;
    std::vector<std::int32_t> paired_labels; // diagnostics only, never trained on
    Matrix unpaired_a;
    std::vector<std::int32_t> unpaired_a_labels;
    Matrix unpaired_b;
    std::vector<std::int32_t> unpaired_b_labels;
    Matrix test_a;
    Matrix test_b;
    std::vector<std::int32_t> test_labels;

    bool operator==(const Dataset&) const = default;
};

Dataset generate(const SyntheticSpec& spec);

/// Binary container (magic, version, spec echo, column-major float64 blocks,
/// checksum) plus a human-readable JSON sidecar at path + ".spec.json".
/// Round trips are bit-exact.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace semalign
