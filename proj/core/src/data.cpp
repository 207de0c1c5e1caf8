#include "semalign/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

using nlohmann::json;

void SyntheticSpec::validate() const {
    if (semantic_dim < 1) throw ValueError("SyntheticSpec: semantic_dim must be >= 1");
    if (clusters < 1) throw ValueError("SyntheticSpec: clusters must be >= 1");
    if (dim_a < 1 || dim_b < 1) throw ValueError("SyntheticSpec: modality dims must be >= 1");
    if (pairs < 0 || unpaired_a < 0 || unpaired_b < 0 || test_pairs < 0) {
        throw ValueError("SyntheticSpec: counts must be >= 0");
    }
    if (noise_std < 0.0) throw ValueError("SyntheticSpec: noise_std must be >= 0");
    if (map_a == Map::Identity && dim_a != semantic_dim) {
        throw ValueError("SyntheticSpec: identity map requires dim_a == semantic_dim");
    }
    if (map_b == Map::Identity && dim_b != semantic_dim) {
        throw ValueError("SyntheticSpec: identity map requires dim_b == semantic_dim");
    }
}

namespace {

constexpr double kClusterStd = 0.5;

struct Mixture {
    Matrix means;                // clusters x semantic_dim
    std::vector<double> weights; // cumulative, last entry 1
};

Mixture make_mixture(const SyntheticSpec& spec, Rng rng) {
    Mixture mix;
    mix.means = Matrix(spec.clusters, spec.semantic_dim);
    for (int c = 0; c < spec.clusters; ++c)
        for (int k = 0; k < spec.semantic_dim; ++k) mix.means(c, k) = rng.uniform(-3.0, 3.0);
    // linear weight ramp: w_c proportional to c+1. Unequal masses pin the
    // cluster correspondence that pure distribution matching must recover.
    double total = spec.clusters * (spec.clusters + 1) / 2.0;
    double cum = 0.0;
    for (int c = 0; c < spec.clusters; ++c) {
        cum += (c + 1) / total;
        mix.weights.push_back(cum);
    }
    mix.weights.back() = 1.0;
    return mix;
}

std::pair<Matrix, int> sample_semantic(const Mixture& mix, Rng& rng) {
    double x = rng.uniform();
    int c = 0;
    while (c + 1 < static_cast<int>(mix.weights.size()) &&
           x >= mix.weights[static_cast<std::size_t>(c)]) {
        ++c;
    }
    Matrix s(1, mix.means.cols());
    for (int k = 0; k < s.cols(); ++k) s(0, k) = mix.means(c, k) + kClusterStd * rng.normal();
    return {std::move(s), c};
}

struct ModalityMap {
    SyntheticSpec::Map kind = SyntheticSpec::Map::Identity;
    Matrix w1; // semantic -> hidden (TanhWarped) or semantic -> out (Linear)
    Matrix w2; // hidden -> out (TanhWarped only)
    Matrix offset;

    Matrix apply(const Matrix& s) const {
        if (kind == SyntheticSpec::Map::Identity) return s;
        if (kind == SyntheticSpec::Map::Linear) return add(matmul(s, w1), offset);
        Matrix h = matmul(s, w1);
        for (double& v : h.data()) v = std::tanh(v);
        return add(matmul(h, w2), offset);
    }
};

ModalityMap make_map(SyntheticSpec::Map kind, int semantic_dim, int out_dim, Rng rng) {
    ModalityMap map;
    map.kind = kind;
    if (kind == SyntheticSpec::Map::Identity) return map;
    map.offset = Matrix(1, out_dim);
    for (double& v : map.offset.data()) v = 0.5 * rng.normal();
    if (kind == SyntheticSpec::Map::Linear) {
        map.w1 = Matrix(semantic_dim, out_dim);
        double s = 1.0 / std::sqrt(static_cast<double>(semantic_dim));
        for (double& v : map.w1.data()) v = s * rng.normal();
        return map;
    }
    int hidden = 2 * semantic_dim;
    map.w1 = Matrix(semantic_dim, hidden);
    // half-scale first layer keeps tanh near its active region
    double s1 = 0.5 / std::sqrt(static_cast<double>(semantic_dim));
    for (double& v : map.w1.data()) v = s1 * rng.normal();
    map.w2 = Matrix(hidden, out_dim);
    double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& v : map.w2.data()) v = s2 * rng.normal();
    return map;
}

Matrix emit(const ModalityMap& map, const Matrix& s, double noise_std, Rng& rng) {
    Matrix x = map.apply(s);
    for (double& v : x.data()) v += noise_std * rng.normal();
    return x;
}

void append_row(Matrix& dst, int row, const Matrix& src) {
    for (int k = 0; k < src.cols(); ++k) dst(row, k) = src(0, k);
}

} // namespace

Dataset generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng root(spec.seed);
    Mixture mix = make_mixture(spec, root.derive(10));
    ModalityMap map_a = make_map(spec.map_a, spec.semantic_dim, spec.dim_a, root.derive(11));
    ModalityMap map_b = make_map(spec.map_b, spec.semantic_dim, spec.dim_b, root.derive(12));

    Dataset ds;
    ds.spec = spec;

    Rng paired_rng = root.derive(13);
    ds.paired_a = Matrix(spec.pairs, spec.dim_a);
    ds.paired_b = Matrix(spec.pairs, spec.dim_b);
    for (int i = 0; i < spec.pairs; ++i) {
        auto [s, label] = sample_semantic(mix, paired_rng);
        append_row(ds.paired_a, i, emit(map_a, s, spec.noise_std, paired_rng));
        append_row(ds.paired_b, i, emit(map_b, s, spec.noise_std, paired_rng));
        ds.paired_labels.push_back(label);
    }

    Rng unpaired_a_rng = root.derive(14);
    ds.unpaired_a = Matrix(spec.unpaired_a, spec.dim_a);
    for (int i = 0; i < spec.unpaired_a; ++i) {
        auto [s, label] = sample_semantic(mix, unpaired_a_rng);
        append_row(ds.unpaired_a, i, emit(map_a, s, spec.noise_std, unpaired_a_rng));
        ds.unpaired_a_labels.push_back(label);
    }

    Rng unpaired_b_rng = root.derive(15);
    ds.unpaired_b = Matrix(spec.unpaired_b, spec.dim_b);
    for (int i = 0; i < spec.unpaired_b; ++i) {
        auto [s, label] = sample_semantic(mix, unpaired_b_rng);
        append_row(ds.unpaired_b, i, emit(map_b, s, spec.noise_std, unpaired_b_rng));
        ds.unpaired_b_labels.push_back(label);
    }

    Rng test_rng = root.derive(16);
    ds.test_a = Matrix(spec.test_pairs, spec.dim_a);
    ds.test_b = Matrix(spec.test_pairs, spec.dim_b);
    for (int i = 0; i < spec.test_pairs; ++i) {
        auto [s, label] = sample_semantic(mix, test_rng);
        append_row(ds.test_a, i, emit(map_a, s, spec.noise_std, test_rng));
        append_row(ds.test_b, i, emit(map_b, s, spec.noise_std, test_rng));
        ds.test_labels.push_back(label);
    }
    return ds;
}

// --- serialization -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'M', 'A', 'L', 'N', 'D', 'S', '1'};
constexpr std::uint32_t kVersion = 1;

std::string map_name(SyntheticSpec::Map m) {
    switch (m) {
    case SyntheticSpec::Map::Identity: return "identity";
    case SyntheticSpec::Map::Linear: return "linear";
    case SyntheticSpec::Map::TanhWarped: return "tanh_warped";
    }
    return "linear";
}

SyntheticSpec::Map map_from_name(const std::string& name) {
    if (name == "identity") return SyntheticSpec::Map::Identity;
    if (name == "linear") return SyntheticSpec::Map::Linear;
    if (name == "tanh_warped") return SyntheticSpec::Map::TanhWarped;
    throw ValueError("unknown modality map '" + name + "'");
}

json spec_to_json(const SyntheticSpec& s) {
    return json{{"semantic_dim", s.semantic_dim}, {"clusters", s.clusters},
                {"dim_a", s.dim_a},               {"dim_b", s.dim_b},
                {"map_a", map_name(s.map_a)},     {"map_b", map_name(s.map_b)},
                {"noise_std", s.noise_std},       {"pairs", s.pairs},
                {"unpaired_a", s.unpaired_a},     {"unpaired_b", s.unpaired_b},
                {"test_pairs", s.test_pairs},     {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
    SyntheticSpec s;
    s.semantic_dim = j.at("semantic_dim").get<int>();
    s.clusters = j.at("clusters").get<int>();
    s.dim_a = j.at("dim_a").get<int>();
    s.dim_b = j.at("dim_b").get<int>();
    s.map_a = map_from_name(j.at("map_a").get<std::string>());
    s.map_b = map_from_name(j.at("map_b").get<std::string>());
    s.noise_std = j.at("noise_std").get<double>();
    s.pairs = j.at("pairs").get<int>();
    s.unpaired_a = j.at("unpaired_a").get<int>();
    s.unpaired_b = j.at("unpaired_b").get<int>();
    s.test_pairs = j.at("test_pairs").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("cannot open '" + path + "' for writing");
        static_assert(std::endian::native == std::endian::little,
                      "dataset format is little-endian");
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        fnv_update(p, n);
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }

    void matrix(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (int j = 0; j < m.cols(); ++j)
            for (int i = 0; i < m.rows(); ++i) f64(m(i, j));
    }

    void labels(const std::vector<std::int32_t>& v) {
        u64(v.size());
        if (!v.empty()) bytes(v.data(), v.size() * sizeof(std::int32_t));
    }

    void finish(const std::string& path) {
        std::uint64_t sum = fnv_;
        out_.write(reinterpret_cast<const char*>(&sum), sizeof sum);
        out_.flush();
        if (!out_) throw Error("write failed for '" + path + "'");
    }

private:
    void fnv_update(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            fnv_ ^= b[i];
            fnv_ *= 0x100000001b3ULL;
        }
    }

    std::ofstream out_;
    std::uint64_t fnv_ = 0xcbf29ce484222325ULL;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw Error("cannot open '" + path + "' for reading");
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw ParseError("truncated dataset file", offset_ + static_cast<std::uint64_t>(
                                                                     in_.gcount()));
        }
        offset_ += n;
        fnv_update(p, n);
    }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, sizeof v); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, sizeof v); return v; }

    Matrix matrix() {
        std::uint64_t rows = u64();
        std::uint64_t cols = u64();
        if (rows > (1ULL << 31) || cols > (1ULL << 31)) {
            throw ParseError("implausible matrix block header", offset_);
        }
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        for (int j = 0; j < m.cols(); ++j)
            for (int i = 0; i < m.rows(); ++i) {
                double v;
                bytes(&v, sizeof v);
                m(i, j) = v;
            }
        return m;
    }

    std::vector<std::int32_t> labels() {
        std::uint64_t n = u64();
        if (n > (1ULL << 31)) throw ParseError("implausible label block header", offset_);
        std::vector<std::int32_t> v(n);
        if (n > 0) bytes(v.data(), n * sizeof(std::int32_t));
        return v;
    }

    void check_footer() {
        std::uint64_t expected = fnv_;
        std::uint64_t stored;
        bytes(&stored, sizeof stored);
        // the checksum bytes themselves fold into fnv_, compare pre-read value
        if (stored != expected) throw ParseError("checksum mismatch", offset_ - sizeof stored);
        char extra;
        in_.read(&extra, 1);
        if (in_.gcount() != 0) throw ParseError("trailing bytes after dataset payload", offset_);
    }

    std::uint64_t offset() const { return offset_; }

private:
    void fnv_update(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            fnv_ ^= b[i];
            fnv_ *= 0x100000001b3ULL;
        }
    }

    std::ifstream in_;
    std::uint64_t offset_ = 0;
    std::uint64_t fnv_ = 0xcbf29ce484222325ULL;
};

} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kVersion);
    std::string spec = spec_to_json(ds.spec).dump();
    w.u64(spec.size());
    w.bytes(spec.data(), spec.size());
    w.matrix(ds.paired_a);
    w.matrix(ds.paired_b);
    w.matrix(ds.unpaired_a);
    w.matrix(ds.unpaired_b);
    w.matrix(ds.test_a);
    w.matrix(ds.test_b);
    w.labels(ds.paired_labels);
    w.labels(ds.unpaired_a_labels);
    w.labels(ds.unpaired_b_labels);
    w.labels(ds.test_labels);
    w.finish(path);

    std::ofstream sidecar(path + ".spec.json");
    sidecar << spec_to_json(ds.spec).dump(2) << "\n";
}

Dataset load_dataset(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw ParseError("bad magic; not a dataset file", 0);
    }
    std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw VersionError("unsupported dataset version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kVersion) + ")");
    }
    std::uint64_t spec_len = r.u64();
    if (spec_len > (1ULL << 20)) throw ParseError("implausible spec length", r.offset());
    std::string spec_text(spec_len, '\0');
    r.bytes(spec_text.data(), spec_len);

    Dataset ds;
    try {
        ds.spec = spec_from_json(json::parse(spec_text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad spec block: ") + e.what(), r.offset());
    }
    ds.paired_a = r.matrix();
    ds.paired_b = r.matrix();
    ds.unpaired_a = r.matrix();
    ds.unpaired_b = r.matrix();
    ds.test_a = r.matrix();
    ds.test_b = r.matrix();
    ds.paired_labels = r.labels();
    ds.unpaired_a_labels = r.labels();
    ds.unpaired_b_labels = r.labels();
    ds.test_labels = r.labels();
    r.check_footer();
    return ds;
}

} // namespace semalign
