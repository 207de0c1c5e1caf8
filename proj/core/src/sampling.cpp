#include "semalign/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "semalign/errors.hpp"
#include "semalign/rng.hpp"

namespace semalign {

Matrix parzen_profile(const Matrix& eval_points, const Matrix& sample_points, double sigma_floor) {
    if (eval_points.cols() != sample_points.cols()) {
        throw DimensionError("parzen_profile: column mismatch");
    }
    if (sample_points.rows() < 2) throw ValueError("parzen_profile: needs a batch of >= 2 rows");
    double sigma = std::max(batch_variance(sample_points), sigma_floor);
    int b = sample_points.rows();
    Matrix out(eval_points.rows(), 1);
    for (int i = 0; i < eval_points.rows(); ++i) {
        const double* xi = eval_points.row_ptr(i);
        double acc = 0.0;
        for (int j = 0; j < b; ++j) {
            const double* sj = sample_points.row_ptr(j);
            double d = 0.0;
            for (int k = 0; k < eval_points.cols(); ++k) {
                double diff = xi[k] - sj[k];
                d += diff * diff;
            }
            acc += std::exp(-d / sigma);
        }
        out(i, 0) = acc / (b * std::numbers::pi);
    }
    return out;
}

double representativeness_gap(const Matrix& t, const Matrix& r, double sigma_floor) {
    if (t.rows() != r.rows() || t.cols() != r.cols()) {
        throw DimensionError("representativeness_gap: batch shapes differ");
    }
    int b = t.rows();
    if (b < 2) throw ValueError("representativeness_gap: needs B >= 2");

    Matrix ktt = parzen_profile(t, t, sigma_floor);
    Matrix ktr = parzen_profile(t, r, sigma_floor);
    Matrix krr = parzen_profile(r, r, sigma_floor);
    Matrix krt = parzen_profile(r, t, sigma_floor);

    double d = 0.0;
    for (int i = 0; i < b; ++i) {
        double g1 = ktt(i, 0) - ktr(i, 0);
        double g2 = krr(i, 0) - krt(i, 0);
        d += g1 * g1 + g2 * g2;
    }
    return d / b;
}

void SweepConfig::validate() const {
    if (sizes.empty() || dims.empty()) throw ValueError("SweepConfig: sizes and dims must be non-empty");
    for (int s : sizes) {
        if (s < 2) throw ValueError("SweepConfig: sizes must be >= 2");
    }
    for (int d : dims) {
        if (d < 1) throw ValueError("SweepConfig: dims must be >= 1");
    }
    if (trials < 1) throw ValueError("SweepConfig: trials must be >= 1");
}

namespace {

struct MixtureRef {
    Matrix means; // components x dim
    double comp_std = 0.15;
};

MixtureRef make_mixture(std::uint64_t seed, int dim) {
    Rng rng(mix_seed(seed, 0x6d697874ULL + static_cast<std::uint64_t>(dim)));
    MixtureRef ref;
    ref.means = Matrix(4, dim);
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k < dim; ++k) ref.means(c, k) = rng.uniform();
    return ref;
}

Matrix draw_batch(const SweepConfig& cfg, const MixtureRef& mix, int size, int dim, Rng& rng) {
    Matrix out(size, dim);
    if (cfg.reference == SweepConfig::Reference::Uniform) {
        for (int i = 0; i < size; ++i)
            for (int k = 0; k < dim; ++k) out(i, k) = rng.uniform();
        return out;
    }
    for (int i = 0; i < size; ++i) {
        int c = static_cast<int>(rng.index(static_cast<std::size_t>(mix.means.rows())));
        for (int k = 0; k < dim; ++k) out(i, k) = mix.means(c, k) + mix.comp_std * rng.normal();
    }
    return out;
}

} // namespace

std::vector<SweepRow> sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<int> sizes = cfg.sizes;
    std::sort(sizes.begin(), sizes.end());

    std::vector<SweepRow> rows;
    for (int size : sizes) {
        for (int dim : cfg.dims) {
            MixtureRef mix = make_mixture(cfg.seed, dim);
            double mean = 0.0;
            std::vector<double> samples(static_cast<std::size_t>(cfg.trials));
            for (int trial = 0; trial < cfg.trials; ++trial) {
                std::uint64_t s = mix_seed(mix_seed(mix_seed(cfg.seed, size), dim), trial);
                Rng rng(s);
                Matrix t = draw_batch(cfg, mix, size, dim, rng);
                Matrix r = draw_batch(cfg, mix, size, dim, rng);
                samples[static_cast<std::size_t>(trial)] =
                    representativeness_gap(t, r, cfg.sigma_floor);
                mean += samples[static_cast<std::size_t>(trial)];
            }
            mean /= cfg.trials;
            double var = 0.0;
            for (double d : samples) var += (d - mean) * (d - mean);
            double stdev = cfg.trials > 1 ? std::sqrt(var / (cfg.trials - 1)) : 0.0;
            rows.push_back(SweepRow{size, dim, mean, stdev, 0.0, cfg.trials});
        }
    }
    // normalize against the smallest size per dim
    for (SweepRow& row : rows) {
        for (const SweepRow& base : rows) {
            if (base.dim == row.dim && base.size == sizes.front() && base.mean_d > 0.0) {
                row.normalized_d = row.mean_d / base.mean_d;
            }
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const SweepConfig& cfg) {
    std::ostringstream os;
    os << "# trials=" << cfg.trials << " reference="
       << (cfg.reference == SweepConfig::Reference::Uniform ? "uniform" : "gaussian_mixture")
       << " seed=" << cfg.seed << "\n";
    os << "size,dim,mean_D,std_D,normalized_D\n";
    os.precision(17);
    for (const SweepRow& row : rows) {
        os << row.size << ',' << row.dim << ',' << row.mean_d << ',' << row.std_d << ','
           << row.normalized_d << "\n";
    }
    return os.str();
}

} // namespace semalign
