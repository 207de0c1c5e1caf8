#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semalign/data.hpp"
#include "semalign/errors.hpp"
#include "semalign/sampling.hpp"
#include "semalign/selfcheck.hpp"
#include "semalign/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semalign;

namespace {

// ---------------------------------------------------------------------------
// run configuration: one file covering data generation, training, evaluation
// and the sampling sweep. Every field has a default; the resolved form is
// echoed into the output directory of each run.
// ---------------------------------------------------------------------------

struct ModelConfig {
    // one small hidden layer: enough to bend the synthetic manifolds, small
    // enough that distribution matching cannot fold them
    std::vector<int> encoder_hidden = {8};
    int latent_dim = 16;
    std::string activation = "tanh";
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "runs/latest";
    std::string mode = "setclip";
    TrainConfig train;
    ModelConfig model;
    SyntheticSpec data;
    SweepConfig sweep;
};

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ValueError("config: unknown key '" + item.key() + "' in section '" + section +
                             "'");
        }
    }
}

void apply_mode(const std::string& mode, TrainConfig& train) {
    if (mode == "clip") {
        train.weights = {1.0, 0.0, 0.0, 0.0};
        train.use_cl = true;
        train.use_unpaired = false;
    } else if (mode == "setclip") {
        train.weights = {1.0, 0.1, 1.0, 0.1};
        train.use_cl = true;
        train.use_unpaired = true;
    } else if (mode == "unsup") {
        train.weights = {0.0, 0.1, 1.0, 0.1};
        train.use_cl = false;
        train.use_unpaired = true;
    } else if (mode == "sdd-only") {
        train.weights = {0.0, 0.0, 1.0, 0.0};
        train.use_cl = false;
        train.use_unpaired = true;
    } else if (mode == "ssl-only") {
        train.weights = {1.0, 0.0, 0.0, 1.0};
        train.use_cl = false;
        train.use_unpaired = true;
    } else {
        throw ValueError("config: unknown mode '" + mode +
                         "' (expected clip|setclip|unsup|sdd-only|ssl-only)");
    }
}

SyntheticSpec::Map map_from_string(const std::string& s) {
    if (s == "identity") return SyntheticSpec::Map::Identity;
    if (s == "linear") return SyntheticSpec::Map::Linear;
    if (s == "tanh_warped") return SyntheticSpec::Map::TanhWarped;
    throw ValueError("config: unknown modality map '" + s + "'");
}

std::string map_to_string(SyntheticSpec::Map m) {
    switch (m) {
    case SyntheticSpec::Map::Identity: return "identity";
    case SyntheticSpec::Map::Linear: return "linear";
    case SyntheticSpec::Map::TanhWarped: return "tanh_warped";
    }
    return "linear";
}

RunConfig parse_config(const json& j) {
    check_keys(j, "<root>",
               {"seed", "out_dir", "mode", "train", "weights", "sdd", "kernel", "ssl", "model",
                "data", "sweep"});
    RunConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.mode = j.value("mode", cfg.mode);
    apply_mode(cfg.mode, cfg.train);
    cfg.train.seed = cfg.seed;
    cfg.data.seed = cfg.seed;
    cfg.sweep.seed = cfg.seed;

    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train",
                   {"batch_size", "epochs", "lr", "adam_beta1", "adam_beta2", "adam_eps",
                    "eval_every", "augment_strength"});
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
        cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
        cfg.train.adam_eps = t.value("adam_eps", cfg.train.adam_eps);
        cfg.train.eval_every = t.value("eval_every", cfg.train.eval_every);
        cfg.train.augment_strength = t.value("augment_strength", cfg.train.augment_strength);
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        check_keys(w, "weights", {"alpha", "delta", "eta", "mu"});
        cfg.train.weights.alpha = w.value("alpha", cfg.train.weights.alpha);
        cfg.train.weights.delta = w.value("delta", cfg.train.weights.delta);
        cfg.train.weights.eta = w.value("eta", cfg.train.weights.eta);
        cfg.train.weights.mu = w.value("mu", cfg.train.weights.mu);
    }
    if (j.contains("sdd")) {
        const json& s = j.at("sdd");
        check_keys(s, "sdd",
                   {"bandwidth", "relative_distance", "divergence", "sigma_floor", "prob_floor",
                    "detach_sigma", "detach_normalizer"});
        cfg.train.sdd.bandwidth = s.value("bandwidth", cfg.train.sdd.bandwidth);
        cfg.train.sdd.relative_distance =
            s.value("relative_distance", cfg.train.sdd.relative_distance);
        if (s.contains("divergence")) {
            std::string d = s.at("divergence").get<std::string>();
            if (d == "kl") {
                cfg.train.sdd.divergence = SddConfig::Divergence::Kl;
            } else if (d == "mse") {
                cfg.train.sdd.divergence = SddConfig::Divergence::Mse;
            } else {
                throw ValueError("config: sdd.divergence must be 'kl' or 'mse'");
            }
        }
        cfg.train.sdd.sigma_floor = s.value("sigma_floor", cfg.train.sdd.sigma_floor);
        cfg.train.sdd.prob_floor = s.value("prob_floor", cfg.train.sdd.prob_floor);
        cfg.train.sdd.detach_sigma = s.value("detach_sigma", cfg.train.sdd.detach_sigma);
        cfg.train.sdd.detach_normalizer =
            s.value("detach_normalizer", cfg.train.sdd.detach_normalizer);
    }
    if (j.contains("kernel")) {
        const json& k = j.at("kernel");
        check_keys(k, "kernel", {"specs", "beta_init", "mmd_unbiased"});
        if (k.contains("specs")) {
            cfg.train.kernels.clear();
            for (const json& s : k.at("specs")) {
                check_keys(s, "kernel.specs[]", {"family", "gamma_sq", "coef0", "degree"});
                KernelPlan plan;
                std::string family = s.at("family").get<std::string>();
                if (family == "gaussian") {
                    plan.spec.family = KernelSpec::Family::Gaussian;
                    if (!s.contains("gamma_sq") || s.at("gamma_sq") == "median") {
                        plan.gamma_from_median = true;
                    } else {
                        plan.spec.gamma_sq = s.at("gamma_sq").get<double>();
                    }
                } else if (family == "polynomial") {
                    plan.spec.family = KernelSpec::Family::Polynomial;
                    plan.spec.coef0 = s.value("coef0", plan.spec.coef0);
                    plan.spec.degree = s.value("degree", plan.spec.degree);
                } else {
                    throw ValueError("config: kernel family must be 'gaussian' or 'polynomial'");
                }
                cfg.train.kernels.push_back(plan);
            }
        }
        if (k.contains("beta_init")) {
            cfg.train.beta_init = k.at("beta_init").get<std::vector<double>>();
        }
        cfg.train.mmd_unbiased = k.value("mmd_unbiased", cfg.train.mmd_unbiased);
    }
    if (j.contains("ssl")) {
        const json& s = j.at("ssl");
        check_keys(s, "ssl", {"denominator"});
        if (s.contains("denominator")) {
            std::string d = s.at("denominator").get<std::string>();
            if (d == "batch") {
                cfg.train.ssl_denominator = SslDenominator::Batch;
            } else if (d == "simclr") {
                cfg.train.ssl_denominator = SslDenominator::Simclr;
            } else {
                throw ValueError("config: ssl.denominator must be 'batch' or 'simclr'");
            }
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"encoder_hidden", "latent_dim", "activation"});
        cfg.model.encoder_hidden = m.value("encoder_hidden", cfg.model.encoder_hidden);
        cfg.model.latent_dim = m.value("latent_dim", cfg.model.latent_dim);
        cfg.model.activation = m.value("activation", cfg.model.activation);
        if (cfg.model.activation != "tanh" && cfg.model.activation != "relu") {
            throw ValueError("config: model.activation must be 'tanh' or 'relu'");
        }
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data",
                   {"semantic_dim", "clusters", "dim_a", "dim_b", "map_a", "map_b", "noise_std",
                    "pairs", "unpaired_a", "unpaired_b", "test_pairs"});
        cfg.data.semantic_dim = d.value("semantic_dim", cfg.data.semantic_dim);
        cfg.data.clusters = d.value("clusters", cfg.data.clusters);
        cfg.data.dim_a = d.value("dim_a", cfg.data.dim_a);
        cfg.data.dim_b = d.value("dim_b", cfg.data.dim_b);
        if (d.contains("map_a")) cfg.data.map_a = map_from_string(d.at("map_a"));
        if (d.contains("map_b")) cfg.data.map_b = map_from_string(d.at("map_b"));
        cfg.data.noise_std = d.value("noise_std", cfg.data.noise_std);
        cfg.data.pairs = d.value("pairs", cfg.data.pairs);
        cfg.data.unpaired_a = d.value("unpaired_a", cfg.data.unpaired_a);
        cfg.data.unpaired_b = d.value("unpaired_b", cfg.data.unpaired_b);
        cfg.data.test_pairs = d.value("test_pairs", cfg.data.test_pairs);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, "sweep", {"sizes", "dims", "trials", "reference", "sigma_floor"});
        if (s.contains("sizes")) cfg.sweep.sizes = s.at("sizes").get<std::vector<int>>();
        if (s.contains("dims")) cfg.sweep.dims = s.at("dims").get<std::vector<int>>();
        cfg.sweep.trials = s.value("trials", cfg.sweep.trials);
        if (s.contains("reference")) {
            std::string r = s.at("reference").get<std::string>();
            if (r == "uniform") {
                cfg.sweep.reference = SweepConfig::Reference::Uniform;
            } else if (r == "gaussian_mixture") {
                cfg.sweep.reference = SweepConfig::Reference::GaussianMixture;
            } else {
                throw ValueError("config: sweep.reference must be 'uniform' or 'gaussian_mixture'");
            }
        }
        cfg.sweep.sigma_floor = s.value("sigma_floor", cfg.sweep.sigma_floor);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return parse_config(json::object());
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config file: ") + e.what(), 0);
    }
    return parse_config(j);
}

json resolved_json(const RunConfig& cfg) {
    json kernel_specs = json::array();
    for (const KernelPlan& plan : cfg.train.kernels) {
        if (plan.spec.family == KernelSpec::Family::Gaussian) {
            json spec{{"family", "gaussian"}};
            if (plan.gamma_from_median) {
                spec["gamma_sq"] = "median";
            } else {
                spec["gamma_sq"] = plan.spec.gamma_sq;
            }
            kernel_specs.push_back(spec);
        } else {
            kernel_specs.push_back(
                {{"family", "polynomial"}, {"coef0", plan.spec.coef0}, {"degree", plan.spec.degree}});
        }
    }
    std::vector<double> beta_init = cfg.train.beta_init;
    if (beta_init.empty()) beta_init.assign(cfg.train.kernels.size(), 0.0);

    return json{
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
        {"mode", cfg.mode},
        {"train",
         {{"batch_size", cfg.train.batch_size},
          {"epochs", cfg.train.epochs},
          {"lr", cfg.train.lr},
          {"adam_beta1", cfg.train.adam_beta1},
          {"adam_beta2", cfg.train.adam_beta2},
          {"adam_eps", cfg.train.adam_eps},
          {"eval_every", cfg.train.eval_every},
          {"augment_strength", cfg.train.augment_strength},
          {"use_cl", cfg.train.use_cl},
          {"use_unpaired", cfg.train.use_unpaired}}},
        {"weights",
         {{"alpha", cfg.train.weights.alpha},
          {"delta", cfg.train.weights.delta},
          {"eta", cfg.train.weights.eta},
          {"mu", cfg.train.weights.mu}}},
        {"sdd",
         {{"bandwidth", cfg.train.sdd.bandwidth},
          {"relative_distance", cfg.train.sdd.relative_distance},
          {"divergence",
           cfg.train.sdd.divergence == SddConfig::Divergence::Kl ? "kl" : "mse"},
          {"sigma_floor", cfg.train.sdd.sigma_floor},
          {"prob_floor", cfg.train.sdd.prob_floor},
          {"detach_sigma", cfg.train.sdd.detach_sigma},
          {"detach_normalizer", cfg.train.sdd.detach_normalizer}}},
        {"kernel",
         {{"specs", kernel_specs},
          {"beta_init", beta_init},
          {"mmd_unbiased", cfg.train.mmd_unbiased}}},
        {"ssl",
         {{"denominator",
           cfg.train.ssl_denominator == SslDenominator::Batch ? "batch" : "simclr"}}},
        {"model",
         {{"encoder_hidden", cfg.model.encoder_hidden},
          {"latent_dim", cfg.model.latent_dim},
          {"activation", cfg.model.activation}}},
        {"data",
         {{"semantic_dim", cfg.data.semantic_dim},
          {"clusters", cfg.data.clusters},
          {"dim_a", cfg.data.dim_a},
          {"dim_b", cfg.data.dim_b},
          {"map_a", map_to_string(cfg.data.map_a)},
          {"map_b", map_to_string(cfg.data.map_b)},
          {"noise_std", cfg.data.noise_std},
          {"pairs", cfg.data.pairs},
          {"unpaired_a", cfg.data.unpaired_a},
          {"unpaired_b", cfg.data.unpaired_b},
          {"test_pairs", cfg.data.test_pairs}}},
        {"sweep",
         {{"sizes", cfg.sweep.sizes},
          {"dims", cfg.sweep.dims},
          {"trials", cfg.sweep.trials},
          {"reference",
           cfg.sweep.reference == SweepConfig::Reference::Uniform ? "uniform"
                                                                  : "gaussian_mixture"},
          {"sigma_floor", cfg.sweep.sigma_floor}}}};
}

std::string config_hash(const json& resolved) {
    std::string text = resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

StreamSpec make_stream_spec(const ModelConfig& model, int input_dim) {
    MlpSpec encoder;
    encoder.widths.push_back(input_dim);
    for (int w : model.encoder_hidden) encoder.widths.push_back(w);
    encoder.activation =
        model.activation == "relu" ? MlpSpec::Activation::Relu : MlpSpec::Activation::Tanh;
    encoder.activate_output = true; // every encoder layer is a hidden layer
    if (model.encoder_hidden.empty()) {
        // fully linear stream: the encoder degenerates to one linear layer
        encoder.widths.push_back(model.latent_dim);
        encoder.activate_output = false;
    }
    MlpSpec head;
    head.widths = {encoder.widths.back(), model.latent_dim};
    return StreamSpec{encoder, head};
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(const std::string& config_path, const std::string& out_path) {
    RunConfig cfg = load_config(config_path);
    Dataset ds = generate(cfg.data);
    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset(ds, out_path);
    std::cout << "wrote " << out_path << ": " << ds.paired_a.rows() << " pairs, "
              << ds.unpaired_a.rows() << "+" << ds.unpaired_b.rows() << " unpaired, "
              << ds.test_a.rows() << " test pairs\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& dataset_path, const std::string& out_dir) {
    Dataset ds = load_dataset(dataset_path);
    fs::create_directories(out_dir);

    json resolved = resolved_json(cfg);
    std::string hash = config_hash(resolved);
    {
        std::ofstream echo(out_dir + "/resolved_config.json");
        echo << resolved.dump(2) << "\n";
    }

    StreamSpec spec_a = make_stream_spec(cfg.model, ds.spec.dim_a);
    StreamSpec spec_b = make_stream_spec(cfg.model, ds.spec.dim_b);
    TwoStreamModel model = TwoStreamModel::init(spec_a, spec_b, cfg.seed);

    TrainResult result = train(ds, model, cfg.train, out_dir, hash);
    save_history(result.history, out_dir + "/metrics.json");

    const MetricRecord& last = result.history.back();
    std::cout << "trained " << cfg.train.epochs << " epochs (mode " << cfg.mode << ")\n"
              << "  final: total " << last.l_total << ", cl " << last.l_cl << ", mkmmd "
              << last.l_mkmmd << ", sdd " << last.l_sdd << "\n"
              << "  test recall@1 a->b " << last.recall1_ab << ", b->a " << last.recall1_ba
              << "; recall@5 a->b " << last.recall5_ab << ", b->a " << last.recall5_ba << "\n";
    if (result.replacement_warning) {
        std::cout << "  warning: some batches sampled with replacement (pool smaller than draw)\n";
    }
    std::cout << "outputs in " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset_path,
             const std::vector<int>& ks, const std::string& config_path, bool force,
             const std::string& report_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (!config_path.empty()) {
        RunConfig cfg = load_config(config_path);
        std::string hash = config_hash(resolved_json(cfg));
        if (hash != ckpt.config_hash) {
            if (!force) {
                std::cerr << "error: config hash " << hash << " does not match checkpoint hash "
                          << ckpt.config_hash << " (use --force to evaluate anyway)\n";
                return 1;
            }
            std::cout << "warning: config hash mismatch, continuing under --force\n";
        }
    }
    Dataset ds = load_dataset(dataset_path);
    auto [u, v] = ckpt.model.forward(ds.test_a, ds.test_b);
    RetrievalMetrics rm = evaluate_retrieval(u, v, ks);

    std::cout << "k,recall_a_to_b,recall_b_to_a\n";
    json report{{"checkpoint", ckpt_path},
                {"dataset", dataset_path},
                {"epoch", ckpt.epoch},
                {"queries", ds.test_a.rows()},
                {"recall", json::array()}};
    for (std::size_t i = 0; i < ks.size(); ++i) {
        std::cout << ks[i] << ',' << rm.recall_ab[i] << ',' << rm.recall_ba[i] << "\n";
        report["recall"].push_back(
            {{"k", ks[i]}, {"a_to_b", rm.recall_ab[i]}, {"b_to_a", rm.recall_ba[i]}});
    }
    if (!report_path.empty()) {
        fs::path out(report_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::ofstream f(report_path);
        f << report.dump(2) << "\n";
        std::cout << "report written to " << report_path << "\n";
    }
    return 0;
}

int cmd_sample_analysis(const std::string& config_path, const std::string& out_path) {
    RunConfig cfg = load_config(config_path);
    std::vector<SweepRow> rows = sweep(cfg.sweep);
    std::string csv = sweep_csv(rows, cfg.sweep);
    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream f(out_path);
    if (!f) throw Error("cannot open '" + out_path + "' for writing");
    f << csv;
    std::cout << csv;
    return 0;
}

int cmd_selfcheck(bool inject_fault) {
    SelfcheckReport report = run_selfcheck(inject_fault);
    std::cout << format_report(report);
    return report.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised two-modality alignment: multi-kernel MMD, semantic density "
                 "distribution and contrastive objectives on synthetic data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string dataset_path;
    std::string out_path;
    std::string ckpt_path;
    std::string report_path;
    std::string ks_arg = "1,5";
    std::string mode_override;
    std::string sdd_rd;
    std::string sdd_div;
    bool force = false;
    bool inject_fault = false;
    long long seed_override = -1;
    int epochs_override = -1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic two-modality dataset");
    gen->add_option("--config", config_path, "run config JSON");
    gen->add_option("--out", out_path, "output dataset file")->required();

    CLI::App* tr = app.add_subcommand("train", "train the two-stream model");
    tr->add_option("--config", config_path, "run config JSON");
    tr->add_option("--dataset", dataset_path, "dataset file from gen-data")->required();
    tr->add_option("--out", out_path, "output directory (SEMALIGN_OUT overrides)");
    tr->add_option("--mode", mode_override, "clip|setclip|unsup|sdd-only|ssl-only");
    tr->add_option("--sdd-rd", sdd_rd, "on|off: relative distance inside the KDE");
    tr->add_option("--sdd-div", sdd_div, "kl|mse: SDD divergence");
    tr->add_option("--seed", seed_override, "override config seed");
    tr->add_option("--epochs", epochs_override, "override epoch count");

    CLI::App* ev = app.add_subcommand("eval", "retrieval evaluation of a checkpoint");
    ev->add_option("--checkpoint", ckpt_path, "checkpoint JSON")->required();
    ev->add_option("--dataset", dataset_path, "dataset file")->required();
    ev->add_option("--ks", ks_arg, "comma-separated recall cutoffs (default 1,5)");
    ev->add_option("--config", config_path, "config to verify against the checkpoint hash");
    ev->add_flag("--force", force, "evaluate despite a config hash mismatch");
    ev->add_option("--out", report_path, "write a JSON report here");

    CLI::App* sa = app.add_subcommand("sample-analysis",
                                      "batch representativeness sweep over sampling sizes");
    sa->add_option("--config", config_path, "run config JSON");
    sa->add_option("--out", out_path, "output CSV")->required();

    CLI::App* sc = app.add_subcommand("selfcheck", "gradient, oracle and invariant battery");
    sc->add_flag("--inject-fault", inject_fault,
                 "perturb one gradient to prove the checker detects faults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_path);
        if (tr->parsed()) {
            RunConfig cfg = load_config(config_path);
            if (!mode_override.empty()) {
                cfg.mode = mode_override;
                apply_mode(cfg.mode, cfg.train);
            }
            if (!sdd_rd.empty()) {
                if (sdd_rd != "on" && sdd_rd != "off") {
                    throw ValueError("--sdd-rd expects on|off");
                }
                cfg.train.sdd.relative_distance = sdd_rd == "on";
            }
            if (!sdd_div.empty()) {
                if (sdd_div == "kl") {
                    cfg.train.sdd.divergence = SddConfig::Divergence::Kl;
                } else if (sdd_div == "mse") {
                    cfg.train.sdd.divergence = SddConfig::Divergence::Mse;
                } else {
                    throw ValueError("--sdd-div expects kl|mse");
                }
            }
            if (seed_override >= 0) {
                cfg.seed = static_cast<std::uint64_t>(seed_override);
                cfg.train.seed = cfg.seed;
            }
            if (epochs_override >= 0) cfg.train.epochs = epochs_override;

            std::string out_dir = out_path.empty() ? cfg.out_dir : out_path;
            if (const char* env = std::getenv("SEMALIGN_OUT")) out_dir = env;
            return cmd_train(cfg, dataset_path, out_dir);
        }
        if (ev->parsed()) {
            std::vector<int> ks;
            std::stringstream ss(ks_arg);
            std::string item;
            while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
            return cmd_eval(ckpt_path, dataset_path, ks, config_path, force, report_path);
        }
        if (sa->parsed()) return cmd_sample_analysis(config_path, out_path);
        if (sc->parsed()) return cmd_selfcheck(inject_fault);
    } catch (const TrainingError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
