#include "semalign/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

namespace {

thread_local std::uint64_t g_kernel_evals = 0;

void check_batches(const Matrix& u, const Matrix& v, const char* op) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        throw DimensionError(std::string(op) + ": batch shapes differ (" + std::to_string(u.rows()) +
                             "x" + std::to_string(u.cols()) + " vs " + std::to_string(v.rows()) +
                             "x" + std::to_string(v.cols()) + ")");
    }
}

} // namespace

std::uint64_t sdd_kernel_eval_count() { return g_kernel_evals; }
void reset_sdd_kernel_eval_count() { g_kernel_evals = 0; }

void SddConfig::validate() const {
    if (!(bandwidth > 0.0)) throw ValueError("SddConfig: bandwidth must be > 0");
    if (!(sigma_floor > 0.0)) throw ValueError("SddConfig: sigma_floor must be > 0");
    if (!(prob_floor > 0.0)) throw ValueError("SddConfig: prob_floor must be > 0");
}

void LossWeights::validate() const {
    for (double w : {alpha, delta, eta, mu}) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValueError("LossWeights: weights must be finite and >= 0");
        }
    }
}

Var mkmmd_loss(Tape& t, const std::vector<KernelSpec>& specs, Var beta_logits, Var u, Var v,
               bool unbiased) {
    check_batches(t.value(u), t.value(v), "mkmmd_loss");
    int b = t.value(u).rows();
    if (b < 1) throw ValueError("mkmmd_loss: empty batch");
    if (unbiased && b < 2) throw ValueError("mkmmd_loss: unbiased estimator needs B >= 2");

    Var kuu = multi_gram(t, specs, beta_logits, u, u);
    Var kvv = multi_gram(t, specs, beta_logits, v, v);
    Var kuv = multi_gram(t, specs, beta_logits, u, v);
    if (!unbiased) {
        return t.sub(t.add(t.mean_all(kuu), t.mean_all(kvv)), t.scale(t.mean_all(kuv), 2.0));
    }
    double off = 1.0 / (static_cast<double>(b) * (b - 1));
    Var uu = t.scale(t.sub(t.sum_all(kuu), t.sum_diag(kuu)), off);
    Var vv = t.scale(t.sub(t.sum_all(kvv), t.sum_diag(kvv)), off);
    Var uv = t.scale(t.sum_all(kuv), 2.0 / (static_cast<double>(b) * b));
    return t.sub(t.add(uu, vv), uv);
}

Var kappa_profile(Tape& t, Var eval_points, Var sample_points, const SddConfig& cfg) {
    cfg.validate();
    const Matrix& ev = t.value(eval_points);
    const Matrix& sv = t.value(sample_points);
    if (ev.cols() != sv.cols()) throw DimensionError("kappa_profile: column mismatch");
    int b_sample = sv.rows();
    if (cfg.relative_distance && b_sample < 2) {
        throw ValueError("kappa_profile: relative distance needs a sample batch of >= 2 rows");
    }
    if (b_sample < 1) throw ValueError("kappa_profile: empty sample batch");

    double b2 = cfg.bandwidth * cfg.bandwidth;
    Var dists = t.pairwise_sq_dists(eval_points, sample_points);
    g_kernel_evals += static_cast<std::uint64_t>(ev.rows()) * static_cast<std::uint64_t>(b_sample);

    Var denom;
    if (cfg.relative_distance) {
        Var sigma = t.clamp_min(t.batch_variance(sample_points), cfg.sigma_floor);
        if (cfg.detach_sigma) sigma = t.constant(t.value(sigma));
        denom = t.scale(sigma, b2);
    } else {
        denom = t.constant_scalar(b2);
    }
    Var expo = t.exp(t.scale(t.div_scalar(dists, denom), -1.0));
    double prefactor = 1.0 / (2.0 * b_sample * b2 * std::numbers::pi);
    return t.scale(t.row_sums(expo), prefactor);
}

Var gamma_divergence(Tape& t, Var t_batch, Var r_batch, const SddConfig& cfg) {
    check_batches(t.value(t_batch), t.value(r_batch), "gamma_divergence");
    if (t.value(t_batch).rows() < 2) throw ValueError("gamma_divergence: needs B >= 2");

    Var kt = kappa_profile(t, t_batch, t_batch, cfg);
    Var kr = kappa_profile(t, t_batch, r_batch, cfg);

    auto normalizer = [&](Var k) {
        Var s = t.sum_all(k);
        if (cfg.detach_normalizer) s = t.constant(t.value(s));
        return t.clamp_min(s, cfg.prob_floor);
    };
    Var p = t.div_scalar(kt, normalizer(kt));
    Var q = t.div_scalar(kr, normalizer(kr));

    if (cfg.divergence == SddConfig::Divergence::Mse) {
        return t.sum_all(t.pow_int(t.sub(p, q), 2));
    }
    Var log_p = t.log(t.clamp_min(p, cfg.prob_floor));
    Var log_q = t.log(t.clamp_min(q, cfg.prob_floor));
    return t.sum_all(t.mul(p, t.sub(log_p, log_q)));
}

Var sdd_loss(Tape& t, Var u, Var v, const SddConfig& cfg) {
    Var fwd = gamma_divergence(t, u, v, cfg);
    Var bwd = gamma_divergence(t, v, u, cfg);
    return t.scale(t.add(fwd, bwd), 0.5);
}

Var clip_contrastive_loss(Tape& t, Var u, Var v, Var tau) {
    check_batches(t.value(u), t.value(v), "clip_contrastive_loss");
    int n = t.value(u).rows();
    if (n == 0) return t.constant_scalar(0.0);

    Var logits = t.div_scalar(t.cosine_similarity(u, v), tau);
    Var lse_uv = t.sum_all(t.logsumexp_rows(logits));
    Var lse_vu = t.sum_all(t.logsumexp_rows(t.transpose(logits)));
    Var diag = t.sum_diag(logits);
    return t.scale(t.sub(t.add(lse_uv, lse_vu), t.scale(diag, 2.0)), 1.0 / (2.0 * n));
}

Var ssl_loss(Tape& t, Var z, Var z_pos, Var tau, SslDenominator den) {
    check_batches(t.value(z), t.value(z_pos), "ssl_loss");
    int b = t.value(z).rows();
    if (b < 1) throw ValueError("ssl_loss: empty batch");

    Var self_logits = t.div_scalar(t.cosine_similarity(z, z), tau);
    Var pos_col = t.diag_col(t.div_scalar(t.cosine_similarity(z, z_pos), tau));

    Var denom;
    if (den == SslDenominator::Batch) {
        // denominator over the original batch rows: self included, positive
        // excluded
        denom = t.sum_all(t.logsumexp_rows(self_logits));
    } else {
        // conventional form: self masked out, positive appended
        Matrix mask(b, b);
        for (int i = 0; i < b; ++i) mask(i, i) = -1e30;
        Var masked = t.add(self_logits, t.constant(std::move(mask)));
        denom = t.sum_all(t.logsumexp_rows(t.concat_cols(masked, pos_col)));
    }
    return t.scale(t.sub(denom, t.sum_all(pos_col)), 1.0 / b);
}

Var gc_loss(Tape& t, Var cl, Var ssl_u, Var ssl_v, double mu) {
    return t.add(cl, t.scale(t.add(ssl_u, ssl_v), mu));
}

TotalLossGraph total_loss(Tape& t, Var u, Var v, int n_paired, Var u_pos, Var v_pos, Var tau,
                          Var beta_logits, const std::vector<KernelSpec>& specs,
                          const LossWeights& weights, const SddConfig& sdd_cfg, bool use_cl,
                          bool mmd_unbiased, SslDenominator den) {
    weights.validate();
    check_batches(t.value(u), t.value(v), "total_loss");
    if (n_paired < 0 || n_paired > t.value(u).rows()) {
        throw ValueError("total_loss: paired count " + std::to_string(n_paired) + " out of range");
    }

    TotalLossGraph g;
    Var zero = t.constant_scalar(0.0);
    g.cl = zero;
    g.ssl_u = zero;
    g.ssl_v = zero;
    g.mkmmd = zero;
    g.sdd = zero;

    if (weights.alpha != 0.0) {
        if (use_cl && n_paired > 0) {
            g.cl = clip_contrastive_loss(t, t.slice_rows(u, 0, n_paired),
                                         t.slice_rows(v, 0, n_paired), tau);
        }
        g.empty_paired_warning = use_cl && n_paired == 0;
        if (weights.mu != 0.0 && u_pos.valid() && v_pos.valid()) {
            g.ssl_u = ssl_loss(t, u, u_pos, tau, den);
            g.ssl_v = ssl_loss(t, v, v_pos, tau, den);
        }
    }
    if (weights.delta != 0.0) {
        g.mkmmd = mkmmd_loss(t, specs, beta_logits, u, v, mmd_unbiased);
    }
    if (weights.eta != 0.0) {
        g.sdd = sdd_loss(t, u, v, sdd_cfg);
    }

    Var gc = gc_loss(t, g.cl, g.ssl_u, g.ssl_v, weights.mu);
    g.total = t.add(t.add(t.scale(gc, weights.alpha), t.scale(g.mkmmd, weights.delta)),
                    t.scale(g.sdd, weights.eta));
    return g;
}

double mkmmd_loss(const MultiKernel& mk, const Matrix& u, const Matrix& v, bool unbiased) {
    mk.validate();
    Tape t;
    Matrix logits(1, static_cast<int>(mk.beta_logits.size()), mk.beta_logits);
    return t.scalar_value(
        mkmmd_loss(t, mk.specs, t.constant(std::move(logits)), t.constant(u), t.constant(v),
                   unbiased));
}

double kde_density(const Matrix& x, const Matrix& tpts, const SddConfig& cfg) {
    if (x.rows() != 1) throw DimensionError("kde_density: x must be a single row");
    Tape t;
    return t.scalar_value(kappa_profile(t, t.constant(x), t.constant(tpts), cfg));
}

double gamma_divergence(const Matrix& t_batch, const Matrix& r_batch, const SddConfig& cfg) {
    Tape t;
    return t.scalar_value(gamma_divergence(t, t.constant(t_batch), t.constant(r_batch), cfg));
}

double sdd_loss(const Matrix& u, const Matrix& v, const SddConfig& cfg) {
    Tape t;
    return t.scalar_value(sdd_loss(t, t.constant(u), t.constant(v), cfg));
}

double clip_contrastive_loss(const Matrix& u, const Matrix& v, double tau, bool* empty_warning) {
    if (!(tau > 0.0)) throw ValueError("clip_contrastive_loss: tau must be > 0");
    if (empty_warning) *empty_warning = u.rows() == 0;
    Tape t;
    return t.scalar_value(
        clip_contrastive_loss(t, t.constant(u), t.constant(v), t.constant_scalar(tau)));
}

double ssl_loss(const Matrix& z, const Matrix& z_pos, double tau, SslDenominator den) {
    if (!(tau > 0.0)) throw ValueError("ssl_loss: tau must be > 0");
    Tape t;
    return t.scalar_value(
        ssl_loss(t, t.constant(z), t.constant(z_pos), t.constant_scalar(tau), den));
}

double gc_loss(double cl, double ssl_u, double ssl_v, double mu) {
    return cl + mu * ssl_u + mu * ssl_v;
}

} // namespace semalign
