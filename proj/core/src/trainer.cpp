#include "semalign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semalign/errors.hpp"

namespace semalign {

using nlohmann::json;

namespace {

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    if (top.rows() == 0) return bottom;
    if (bottom.rows() == 0) return top;
    if (top.cols() != bottom.cols()) throw DimensionError("stack_rows: column mismatch");
    Matrix out(top.rows() + bottom.rows(), top.cols());
    for (int i = 0; i < top.rows(); ++i)
        for (int j = 0; j < top.cols(); ++j) out(i, j) = top(i, j);
    for (int i = 0; i < bottom.rows(); ++i)
        for (int j = 0; j < top.cols(); ++j) out(top.rows() + i, j) = bottom(i, j);
    return out;
}

/// First k of 0..pool-1 without replacement (partial Fisher-Yates), or k
/// draws with replacement when the pool is too small.
std::vector<std::size_t> draw_indices(std::size_t pool, std::size_t k, Rng& rng,
                                      bool& replacement_warning) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k == 0) return out;
    if (pool >= k) {
        std::vector<std::size_t> idx(pool);
        for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + rng.index(pool - i);
            std::swap(idx[i], idx[j]);
            out.push_back(idx[i]);
        }
        return out;
    }
    replacement_warning = true;
    for (std::size_t i = 0; i < k; ++i) out.push_back(rng.index(pool));
    return out;
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<int>(idx.size()), src.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < src.cols(); ++j)
            out(static_cast<int>(i), j) = src(static_cast<int>(idx[i]), j);
    return out;
}

} // namespace

Matrix MultimodalBatch::full_a() const { return stack_rows(paired_a, unpaired_a); }
Matrix MultimodalBatch::full_b() const { return stack_rows(paired_b, unpaired_b); }

std::vector<KernelPlan> default_kernel_plans() {
    KernelPlan gauss;
    gauss.spec = KernelSpec::gaussian(1.0);
    gauss.gamma_from_median = true;
    KernelPlan poly;
    poly.spec = KernelSpec::polynomial(1.0, 2);
    return {gauss, poly};
}

std::vector<KernelSpec> resolve_kernels(const std::vector<KernelPlan>& plans, const Matrix& u,
                                        const Matrix& v) {
    std::vector<KernelSpec> out;
    out.reserve(plans.size());
    double median = -1.0;
    for (const KernelPlan& plan : plans) {
        KernelSpec spec = plan.spec;
        if (plan.gamma_from_median) {
            if (spec.family != KernelSpec::Family::Gaussian) {
                throw ValueError("resolve_kernels: median heuristic applies to Gaussian kernels");
            }
            if (median < 0.0) median = std::max(median_sq_dist(stack_rows(u, v)), 1e-12);
            spec.gamma_sq = median;
        }
        spec.validate();
        out.push_back(spec);
    }
    return out;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be >= 1");
    if ((weights.eta > 0.0 || weights.delta > 0.0) && batch_size < 2) {
        throw ValueError("TrainConfig: distribution losses need batch_size >= 2");
    }
    if (epochs < 0) throw ValueError("TrainConfig: epochs must be >= 0");
    if (!(lr >= 0.0)) throw ValueError("TrainConfig: learning rate must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ValueError("TrainConfig: Adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ValueError("TrainConfig: Adam eps must be > 0");
    if (eval_every < 1) throw ValueError("TrainConfig: eval_every must be >= 1");
    if (augment_strength < 0.0) throw ValueError("TrainConfig: augment_strength must be >= 0");
    if (kernels.empty()) throw ValueError("TrainConfig: needs at least one kernel");
    if (!beta_init.empty() && beta_init.size() != kernels.size()) {
        throw ValueError("TrainConfig: beta_init size must match kernel count");
    }
    weights.validate();
    sdd.validate();
    for (const KernelPlan& plan : kernels) {
        if (!plan.gamma_from_median) plan.spec.validate();
    }
}

MultimodalBatch compose_batch(const Dataset& dataset, const TrainConfig& cfg, Rng& rng) {
    long long n_pairs = dataset.paired_a.rows();
    long long m1 = cfg.use_unpaired ? dataset.unpaired_a.rows() : 0;
    long long m2 = cfg.use_unpaired ? dataset.unpaired_b.rows() : 0;
    long long m = (m1 + m2) / 2; // single M of the composition rule; averaged
                                 // when the pools are asymmetric
    long long b = cfg.batch_size;
    if (n_pairs + m == 0) throw ValueError("compose_batch: dataset has no usable data");

    long long n = m == 0 ? b : (b * n_pairs) / (n_pairs + m);
    n = std::clamp(n, 0LL, b);

    MultimodalBatch batch;
    std::vector<std::size_t> paired_idx =
        draw_indices(static_cast<std::size_t>(n_pairs), static_cast<std::size_t>(n), rng,
                     batch.replacement_warning);
    batch.paired_a = gather_rows(dataset.paired_a, paired_idx);
    batch.paired_b = gather_rows(dataset.paired_b, paired_idx);

    auto draw_unpaired = [&](const Matrix& pool, const Matrix& paired_pool) {
        std::size_t need = static_cast<std::size_t>(b - n);
        if (need == 0) return Matrix(0, pool.cols() > 0 ? pool.cols() : paired_pool.cols());
        if (pool.rows() == 0) {
            if (paired_pool.rows() == 0) {
                throw ValueError("compose_batch: one modality has no samples at all");
            }
            // empty unpaired pool: fall back to this modality's paired items
            batch.replacement_warning = true;
            std::vector<std::size_t> idx = draw_indices(
                static_cast<std::size_t>(paired_pool.rows()), need, rng,
                batch.replacement_warning);
            return gather_rows(paired_pool, idx);
        }
        std::vector<std::size_t> idx =
            draw_indices(static_cast<std::size_t>(pool.rows()), need, rng,
                         batch.replacement_warning);
        return gather_rows(pool, idx);
    };
    batch.unpaired_a = draw_unpaired(dataset.unpaired_a, dataset.paired_a);
    batch.unpaired_b = draw_unpaired(dataset.unpaired_b, dataset.paired_b);
    return batch;
}

void AdamState::init(const std::vector<Param*>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const Param* p : params) {
        m.emplace_back(p->value.rows(), p->value.cols());
        v.emplace_back(p->value.rows(), p->value.cols());
    }
}

void AdamState::step(const std::vector<Param*>& params, double lr) {
    if (params.size() != m.size()) throw ValueError("AdamState: parameter list changed size");
    ++t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            double g = p.grad.data()[k];
            double& mi = m[i].data()[k];
            double& vi = v[i].data()[k];
            mi = beta1 * mi + (1.0 - beta1) * g;
            vi = beta2 * vi + (1.0 - beta2) * g * g;
            double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
            p.value.data()[k] -= update;
        }
    }
}

RetrievalMetrics evaluate_retrieval(const Matrix& u, const Matrix& v, const std::vector<int>& ks) {
    if (u.rows() != v.rows()) throw DimensionError("evaluate_retrieval: row counts differ");
    for (int k : ks) {
        if (k < 1) throw ValueError("evaluate_retrieval: k must be >= 1");
    }
    RetrievalMetrics out;
    out.ks = ks;
    int q = u.rows();
    if (q == 0) {
        out.recall_ab.assign(ks.size(), 0.0);
        out.recall_ba.assign(ks.size(), 0.0);
        return out;
    }
    Matrix s = cosine_similarity_matrix(u, v);

    auto ranks_of = [&](bool transpose_s) {
        std::vector<int> ranks(static_cast<std::size_t>(q));
        for (int i = 0; i < q; ++i) {
            double own = s(i, i);
            int better = 0;
            for (int j = 0; j < q; ++j) {
                double score = transpose_s ? s(j, i) : s(i, j);
                if (score > own || (score == own && j < i)) ++better;
            }
            ranks[static_cast<std::size_t>(i)] = better + 1;
        }
        return ranks;
    };
    std::vector<int> ranks_ab = ranks_of(false);
    std::vector<int> ranks_ba = ranks_of(true);

    for (int k : ks) {
        int kk = std::min(k, q);
        double hits_ab = 0.0;
        double hits_ba = 0.0;
        for (int i = 0; i < q; ++i) {
            if (ranks_ab[static_cast<std::size_t>(i)] <= kk) hits_ab += 1.0;
            if (ranks_ba[static_cast<std::size_t>(i)] <= kk) hits_ba += 1.0;
        }
        out.recall_ab.push_back(hits_ab / q);
        out.recall_ba.push_back(hits_ba / q);
    }
    return out;
}

// --- serialization -----------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    return Matrix(j.at("rows").get<int>(), j.at("cols").get<int>(),
                  j.at("data").get<std::vector<double>>());
}

json record_to_json(const MetricRecord& r) {
    return json{{"epoch", r.epoch},
                {"l_cl", r.l_cl},
                {"l_ssl_u", r.l_ssl_u},
                {"l_ssl_v", r.l_ssl_v},
                {"l_mkmmd", r.l_mkmmd},
                {"l_sdd", r.l_sdd},
                {"l_total", r.l_total},
                {"recall1_ab", r.recall1_ab},
                {"recall5_ab", r.recall5_ab},
                {"recall1_ba", r.recall1_ba},
                {"recall5_ba", r.recall5_ba}};
}

MetricRecord record_from_json(const json& j) {
    MetricRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.l_cl = j.at("l_cl").get<double>();
    r.l_ssl_u = j.at("l_ssl_u").get<double>();
    r.l_ssl_v = j.at("l_ssl_v").get<double>();
    r.l_mkmmd = j.at("l_mkmmd").get<double>();
    r.l_sdd = j.at("l_sdd").get<double>();
    r.l_total = j.at("l_total").get<double>();
    r.recall1_ab = j.at("recall1_ab").get<double>();
    r.recall5_ab = j.at("recall5_ab").get<double>();
    r.recall1_ba = j.at("recall1_ba").get<double>();
    r.recall5_ba = j.at("recall5_ba").get<double>();
    return r;
}

json mlp_spec_to_json(const MlpSpec& s) {
    return json{{"widths", s.widths},
                {"activation", s.activation == MlpSpec::Activation::Tanh ? "tanh" : "relu"},
                {"activate_output", s.activate_output}};
}

MlpSpec mlp_spec_from_json(const json& j) {
    MlpSpec s;
    s.widths = j.at("widths").get<std::vector<int>>();
    s.activate_output = j.at("activate_output").get<bool>();
    std::string act = j.at("activation").get<std::string>();
    if (act == "tanh") {
        s.activation = MlpSpec::Activation::Tanh;
    } else if (act == "relu") {
        s.activation = MlpSpec::Activation::Relu;
    } else {
        throw ValueError("unknown activation '" + act + "'");
    }
    return s;
}

constexpr int kCheckpointVersion = 1;

} // namespace

void save_history(const MetricHistory& history, const std::string& path) {
    json arr = json::array();
    for (const MetricRecord& r : history) arr.push_back(record_to_json(r));
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << arr.dump(2) << "\n";
}

MetricHistory load_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad history file: ") + e.what(), 0);
    }
    MetricHistory history;
    try {
        for (const json& j : arr) history.push_back(record_from_json(j));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad history record: ") + e.what(), 0);
    }
    return history;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json params = json::object();
    std::vector<const Param*> ps = ckpt.model.params();
    ps.push_back(&ckpt.beta_logits);
    for (const Param* p : ps) params[p->name] = matrix_to_json(p->value);

    json m_states = json::array();
    json v_states = json::array();
    for (const Matrix& m : ckpt.opt.m) m_states.push_back(matrix_to_json(m));
    for (const Matrix& m : ckpt.opt.v) v_states.push_back(matrix_to_json(m));

    json j{{"format", "semalign-checkpoint"},
           {"version", kCheckpointVersion},
           {"epoch", ckpt.epoch},
           {"config_hash", ckpt.config_hash},
           {"rng_state", ckpt.rng_state},
           {"spec_a",
            {{"encoder", mlp_spec_to_json(ckpt.model.spec_a.encoder)},
             {"head", mlp_spec_to_json(ckpt.model.spec_a.head)}}},
           {"spec_b",
            {{"encoder", mlp_spec_to_json(ckpt.model.spec_b.encoder)},
             {"head", mlp_spec_to_json(ckpt.model.spec_b.head)}}},
           {"params", params},
           {"optimizer",
            {{"beta1", ckpt.opt.beta1},
             {"beta2", ckpt.opt.beta2},
             {"eps", ckpt.opt.eps},
             {"t", ckpt.opt.t},
             {"m", m_states},
             {"v", v_states}}}};
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad checkpoint file: ") + e.what(), 0);
    }
    if (j.value("format", "") != "semalign-checkpoint") {
        throw ParseError("not a checkpoint file", 0);
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw VersionError("unsupported checkpoint version " +
                           std::to_string(j.at("version").get<int>()));
    }
    try {
        Checkpoint ckpt;
        ckpt.epoch = j.at("epoch").get<int>();
        ckpt.config_hash = j.at("config_hash").get<std::string>();
        ckpt.rng_state = j.at("rng_state").get<std::string>();

        StreamSpec spec_a{mlp_spec_from_json(j.at("spec_a").at("encoder")),
                          mlp_spec_from_json(j.at("spec_a").at("head"))};
        StreamSpec spec_b{mlp_spec_from_json(j.at("spec_b").at("encoder")),
                          mlp_spec_from_json(j.at("spec_b").at("head"))};
        ckpt.model = TwoStreamModel::init(spec_a, spec_b, 0);

        const json& params = j.at("params");
        for (Param* p : ckpt.model.params()) {
            p->value = matrix_from_json(params.at(p->name));
            p->grad = Matrix(p->value.rows(), p->value.cols());
        }
        const json& beta = params.at("beta_logits");
        ckpt.beta_logits = Param("beta_logits", matrix_from_json(beta));

        const json& opt = j.at("optimizer");
        ckpt.opt.beta1 = opt.at("beta1").get<double>();
        ckpt.opt.beta2 = opt.at("beta2").get<double>();
        ckpt.opt.eps = opt.at("eps").get<double>();
        ckpt.opt.t = opt.at("t").get<std::int64_t>();
        for (const json& m : opt.at("m")) ckpt.opt.m.push_back(matrix_from_json(m));
        for (const json& m : opt.at("v")) ckpt.opt.v.push_back(matrix_from_json(m));
        return ckpt;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad checkpoint contents: ") + e.what(), 0);
    }
}

// --- training loop -----------------------------------------------------------

namespace {

TotalLossGraph build_step(Tape& t, TwoStreamModel& model, Param& beta_logits,
                          const MultimodalBatch& batch, const TrainConfig& cfg, Rng& aug_rng) {
    Matrix xa = batch.full_a();
    Matrix xb = batch.full_b();
    auto [u, v] = model.forward(t, t.constant(xa), t.constant(xb));

    Var u_pos{};
    Var v_pos{};
    if (cfg.weights.alpha != 0.0 && cfg.weights.mu != 0.0) {
        Matrix xa_aug = augment(xa, cfg.augment_strength, aug_rng);
        Matrix xb_aug = augment(xb, cfg.augment_strength, aug_rng);
        auto [up, vp] = model.forward(t, t.constant(xa_aug), t.constant(xb_aug));
        u_pos = up;
        v_pos = vp;
    }

    std::vector<KernelSpec> specs;
    if (cfg.weights.delta != 0.0) {
        specs = resolve_kernels(cfg.kernels, t.value(u), t.value(v));
    }
    Var tau = model.tau_node(t);
    Var beta = t.leaf(beta_logits);
    return total_loss(t, u, v, batch.paired_count(), u_pos, v_pos, tau, beta, specs, cfg.weights,
                      cfg.sdd, cfg.use_cl, cfg.mmd_unbiased, cfg.ssl_denominator);
}

std::string component_dump(const Tape& t, const TotalLossGraph& g) {
    std::ostringstream os;
    os.precision(17);
    os << "cl=" << t.scalar_value(g.cl) << " ssl_u=" << t.scalar_value(g.ssl_u)
       << " ssl_v=" << t.scalar_value(g.ssl_v) << " mkmmd=" << t.scalar_value(g.mkmmd)
       << " sdd=" << t.scalar_value(g.sdd) << " total=" << t.scalar_value(g.total);
    return os.str();
}

double grad_norm(const Param& p) {
    double acc = 0.0;
    for (double g : p.grad.data()) acc += g * g;
    return std::sqrt(acc);
}

int steps_per_epoch(const Dataset& dataset, const TrainConfig& cfg) {
    long long n = dataset.paired_a.rows();
    long long m = cfg.use_unpaired
                      ? (static_cast<long long>(dataset.unpaired_a.rows()) +
                         dataset.unpaired_b.rows()) / 2
                      : 0;
    long long steps = (n + m + cfg.batch_size - 1) / cfg.batch_size;
    return static_cast<int>(std::max(steps, 1LL));
}

} // namespace

TrainResult train(const Dataset& dataset, TwoStreamModel& model, const TrainConfig& cfg,
                  const std::string& out_dir, const std::string& config_hash) {
    cfg.validate();
    if (dataset.paired_a.rows() == 0 && dataset.unpaired_a.rows() == 0 &&
        dataset.unpaired_b.rows() == 0) {
        throw ValueError("train: dataset is empty");
    }

    TrainResult result;
    std::vector<double> beta_init = cfg.beta_init;
    if (beta_init.empty()) beta_init.assign(cfg.kernels.size(), 0.0);
    result.beta_logits =
        Param("beta_logits", Matrix(1, static_cast<int>(beta_init.size()), beta_init));

    std::vector<Param*> params = model.params();
    params.push_back(&result.beta_logits);

    result.opt.beta1 = cfg.adam_beta1;
    result.opt.beta2 = cfg.adam_beta2;
    result.opt.eps = cfg.adam_eps;
    result.opt.init(params);

    Rng root(cfg.seed);
    Rng batch_rng = root.derive(1);
    Rng aug_rng = root.derive(2);
    Rng probe_rng = root.derive(3);
    MultimodalBatch probe = compose_batch(dataset, cfg, probe_rng);

    auto eval_record = [&](int epoch) {
        // fresh derived rng per eval keeps probe augmentation noise fixed, so
        // records are comparable across epochs
        Rng probe_aug = root.derive(4);
        Tape t;
        TotalLossGraph g = build_step(t, model, result.beta_logits, probe, cfg, probe_aug);
        MetricRecord rec;
        rec.epoch = epoch;
        rec.l_cl = t.scalar_value(g.cl);
        rec.l_ssl_u = t.scalar_value(g.ssl_u);
        rec.l_ssl_v = t.scalar_value(g.ssl_v);
        rec.l_mkmmd = t.scalar_value(g.mkmmd);
        rec.l_sdd = t.scalar_value(g.sdd);
        rec.l_total = t.scalar_value(g.total);
        if (dataset.test_a.rows() > 0) {
            auto [tu, tv] = model.forward(dataset.test_a, dataset.test_b);
            RetrievalMetrics rm = evaluate_retrieval(tu, tv, {1, 5});
            rec.recall1_ab = rm.recall_ab[0];
            rec.recall5_ab = rm.recall_ab[1];
            rec.recall1_ba = rm.recall_ba[0];
            rec.recall5_ba = rm.recall_ba[1];
        }
        return rec;
    };

    auto write_checkpoint = [&](int epoch, const std::string& name) {
        if (out_dir.empty()) return;
        Checkpoint ckpt;
        ckpt.model = model;
        ckpt.beta_logits = result.beta_logits;
        ckpt.opt = result.opt;
        ckpt.rng_state = batch_rng.state_string();
        ckpt.config_hash = config_hash;
        ckpt.epoch = epoch;
        save_checkpoint(ckpt, out_dir + "/" + name);
    };

    result.history.push_back(eval_record(0));
    write_checkpoint(0, "checkpoint_epoch_0.json");

    int steps = steps_per_epoch(dataset, cfg);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (int step = 0; step < steps; ++step) {
            MultimodalBatch batch = compose_batch(dataset, cfg, batch_rng);
            result.replacement_warning |= batch.replacement_warning;
            Tape t;
            TotalLossGraph g = build_step(t, model, result.beta_logits, batch, cfg, aug_rng);
            double total = t.scalar_value(g.total);
            if (!std::isfinite(total)) {
                throw TrainingError("non-finite total loss at epoch " + std::to_string(epoch) +
                                    " step " + std::to_string(step) + ": " +
                                    component_dump(t, g));
            }
            value_and_grad(t, g.total, std::span<Param* const>(params));
            for (const Param* p : params) {
                if (!p->grad.all_finite()) {
                    std::ostringstream os;
                    os << "non-finite gradient in '" << p->name << "' at epoch " << epoch
                       << " step " << step << "; " << component_dump(t, g) << "; grad norms:";
                    for (const Param* q : params) os << ' ' << q->name << '=' << grad_norm(*q);
                    throw TrainingError(os.str());
                }
            }
            result.opt.step(params, cfg.lr);
        }
        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            result.history.push_back(eval_record(epoch));
            write_checkpoint(epoch, "checkpoint_epoch_" + std::to_string(epoch) + ".json");
        }
    }
    write_checkpoint(cfg.epochs, "checkpoint_final.json");
    return result;
}

} // namespace semalign
