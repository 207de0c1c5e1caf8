// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 8 drives the installed CLI binary (path in argv[1]); the
// rest run in-process against the library with the same defaults the CLI uses.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "semalign/data.hpp"
#include "semalign/losses.hpp"
#include "semalign/matrix.hpp"
#include "semalign/model.hpp"
#include "semalign/rng.hpp"
#include "semalign/sampling.hpp"
#include "semalign/trainer.hpp"

namespace fs = std::filesystem;
using namespace semalign;

namespace {

int g_failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::ostringstream os;
    os << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name << " - " << detail
       << " (" << std::fixed << std::setprecision(1) << seconds << "s)";
    std::cout << os.str() << std::endl;
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

std::string fmt3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

// the CLI's default architecture: one hidden tanh layer of width 8, K=16
StreamSpec default_stream(int input_dim, int latent = 16) {
    MlpSpec enc;
    enc.widths = {input_dim, 8};
    enc.activate_output = true;
    MlpSpec head;
    head.widths = {8, latent};
    return StreamSpec{enc, head};
}

// fully linear stream used for the zero-paired regime
StreamSpec linear_stream(int input_dim, int latent) {
    MlpSpec enc;
    enc.widths = {input_dim, latent};
    MlpSpec head;
    head.widths = {latent, latent};
    return StreamSpec{enc, head};
}

/// exact one-sided Wilcoxon signed-rank p-value for "diffs > 0"
double wilcoxon_one_sided_p(std::vector<double> diffs) {
    std::vector<double> d;
    for (double x : diffs) {
        if (x != 0.0) d.push_back(x);
    }
    std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mean_rank;
        i = j + 1;
    }
    double w_plus = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (d[k] > 0.0) w_plus += rank[k];
    }
    std::size_t patterns = std::size_t{1} << n;
    std::size_t at_least = 0;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (mask & (std::size_t{1} << k)) w += rank[k];
        }
        if (w >= w_plus) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(patterns);
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness
// ---------------------------------------------------------------------------

double loss_grad_error(const std::function<Var(Tape&, Var, Var)>& build, const Matrix& u0,
                       const Matrix& v0) {
    Param pu("u", u0);
    Param pv("v", v0);
    Tape t;
    Var loss = build(t, t.leaf(pu), t.leaf(pv));
    value_and_grad(t, loss, {&pu, &pv});

    auto eval = [&](const Matrix& u, const Matrix& v) {
        Tape tt;
        return tt.scalar_value(build(tt, tt.constant(u), tt.constant(v)));
    };
    Matrix fd_u = finite_diff_grad([&](const Matrix& m) { return eval(m, v0); }, u0, 1e-5);
    Matrix fd_v = finite_diff_grad([&](const Matrix& m) { return eval(u0, m); }, v0, 1e-5);
    return std::max(oracle::grad_rel_error(pu.grad, fd_u), oracle::grad_rel_error(pv.grad, fd_v));
}

struct ModelGradCase {
    TwoStreamModel model;
    Param beta;
    Matrix xa, xb, xa_aug, xb_aug;
    LossWeights weights{1.0, 0.1, 1.0, 0.1};
    SddConfig sdd_cfg;
    std::vector<KernelSpec> specs{KernelSpec::gaussian(1.5), KernelSpec::polynomial(1.0, 2)};
    int n_paired = 3;

    double total(Tape& t) {
        auto [u, v] = model.forward(t, t.constant(xa), t.constant(xb));
        auto [up, vp] = model.forward(t, t.constant(xa_aug), t.constant(xb_aug));
        Var tau = model.tau_node(t);
        TotalLossGraph g = total_loss(t, u, v, n_paired, up, vp, tau, t.leaf(beta), specs,
                                      weights, sdd_cfg);
        return t.scalar_value(g.total);
    }
};

double model_grad_error(std::uint64_t seed) {
    ModelGradCase c;
    StreamSpec stream{MlpSpec{{4, 6}, MlpSpec::Activation::Tanh, true}, MlpSpec{{6, 4}}};
    c.model = TwoStreamModel::init(stream, stream, seed);
    c.beta = Param("beta_logits", Matrix(1, 2));
    Rng rng(mix_seed(seed, 0xabcd));
    c.xa = oracle::random_matrix(8, 4, rng);
    c.xb = oracle::random_matrix(8, 4, rng);
    c.xa_aug = oracle::random_matrix(8, 4, rng);
    c.xb_aug = oracle::random_matrix(8, 4, rng);

    std::vector<Param*> params = c.model.params();
    params.push_back(&c.beta);
    {
        Tape t;
        auto [u, v] = c.model.forward(t, t.constant(c.xa), t.constant(c.xb));
        auto [up, vp] = c.model.forward(t, t.constant(c.xa_aug), t.constant(c.xb_aug));
        TotalLossGraph g = total_loss(t, u, v, c.n_paired, up, vp, c.model.tau_node(t),
                                      t.leaf(c.beta), c.specs, c.weights, c.sdd_cfg);
        value_and_grad(t, g.total, std::span<Param* const>(params));
    }

    double worst = 0.0;
    for (Param* p : params) {
        Matrix saved = p->value;
        Matrix fd = finite_diff_grad(
            [&](const Matrix& m) {
                p->value = m;
                Tape t;
                double v = c.total(t);
                p->value = saved;
                return v;
            },
            saved, 1e-5);
        p->value = saved;
        worst = std::max(worst, oracle::grad_rel_error(p->grad, fd));
    }
    return worst;
}

void criterion_1() {
    Timer timer;
    SddConfig rd_kl;
    SddConfig rd_mse;
    rd_mse.divergence = SddConfig::Divergence::Mse;
    SddConfig abs_kl;
    abs_kl.relative_distance = false;
    SddConfig abs_mse = abs_kl;
    abs_mse.divergence = SddConfig::Divergence::Mse;
    std::vector<KernelSpec> specs{KernelSpec::gaussian(1.5), KernelSpec::polynomial(1.0, 2)};

    std::vector<std::pair<std::string, std::function<Var(Tape&, Var, Var)>>> cases;
    cases.emplace_back("mkmmd", [&](Tape& t, Var u, Var v) {
        return mkmmd_loss(t, specs, t.constant(Matrix::constant(1, 2, 0.25)), u, v);
    });
    cases.emplace_back("sdd rd/kl",
                       [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, rd_kl); });
    cases.emplace_back("sdd rd/mse",
                       [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, rd_mse); });
    cases.emplace_back("sdd abs/kl",
                       [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, abs_kl); });
    cases.emplace_back("sdd abs/mse",
                       [&](Tape& t, Var u, Var v) { return sdd_loss(t, u, v, abs_mse); });
    cases.emplace_back("clip", [&](Tape& t, Var u, Var v) {
        return clip_contrastive_loss(t, u, v, t.constant_scalar(0.2));
    });
    cases.emplace_back("ssl", [&](Tape& t, Var u, Var v) {
        return ssl_loss(t, u, v, t.constant_scalar(0.2));
    });

    double worst = 0.0;
    std::string worst_name = "-";
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(mix_seed(0xc1, seed));
        Matrix u = oracle::random_matrix(8, 4, rng);
        Matrix v = oracle::random_matrix(8, 4, rng);
        for (const auto& [name, build] : cases) {
            double err = loss_grad_error(build, u, v);
            if (err > worst) {
                worst = err;
                worst_name = name;
            }
        }
        double err = model_grad_error(seed);
        if (err > worst) {
            worst = err;
            worst_name = "total/model";
        }
    }
    double secs = timer.seconds();
    report(1, "gradient correctness",
           worst < 1e-5 && secs < 60.0,
           "max rel err " + fmt(worst) + " (" + worst_name + ") < 1e-5 over 10 seeds, 8x4 batches",
           secs);
}

// ---------------------------------------------------------------------------
// criterion 2: oracle equivalence
// ---------------------------------------------------------------------------

void criterion_2() {
    Timer timer;
    double worst = 0.0;
    std::string worst_name = "-";
    auto track = [&](const std::string& name, double err) {
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(mix_seed(0xc2, seed));
        int b = 4 + static_cast<int>(seed); // batches up to B = 8
        Matrix u = oracle::random_matrix(b, 3, rng);
        Matrix v = oracle::random_matrix(b, 3, rng);
        SddConfig cfg;
        cfg.bandwidth = 0.8;

        // batch variance
        track("sigma", std::abs(batch_variance(u) - oracle::variance(u)));
        // KDE density
        Matrix x = u.row(0);
        track("kappa", std::abs(kde_density(x, v, cfg) - oracle::kappa(u, 0, v, cfg)));
        // density-profile divergence
        track("gamma", std::abs(gamma_divergence(u, v, cfg) - oracle::gamma_div(u, v, cfg)));
        // MK-MMD against the expanded double sum
        MultiKernel mk;
        mk.specs = {KernelSpec::gaussian(1.2), KernelSpec::polynomial(1.0, 2)};
        mk.beta_logits = {0.3, -0.1};
        track("mkmmd",
              std::abs(mkmmd_loss(mk, u, v) - oracle::mkmmd(mk.specs, mk.betas(), u, v)));
        // contrastive and self-supervised losses
        track("cl", std::abs(clip_contrastive_loss(u, v, 0.3) - oracle::clip_loss(u, v, 0.3)));
        track("ssl", std::abs(ssl_loss(u, v, 0.3) - oracle::ssl_loss(u, v, 0.3, true)));
    }
    report(2, "oracle equivalence", worst <= 1e-10,
           "max |impl - scalar oracle| " + fmt(worst) + " (" + worst_name + ") <= 1e-10",
           timer.seconds());
}

// ---------------------------------------------------------------------------
// criterion 3: identity/nullity battery
// ---------------------------------------------------------------------------

void criterion_3() {
    Timer timer;
    SddConfig kl;
    SddConfig mse;
    mse.divergence = SddConfig::Divergence::Mse;
    MultiKernel mk;
    mk.specs = {KernelSpec::gaussian(1.0), KernelSpec::polynomial(1.0, 2)};
    mk.beta_logits = {0.0, 0.0};

    double worst_self = 0.0;
    double worst_mmd = 0.0;
    double worst_kl = 0.0;
    double worst_sym = 0.0;
    double worst_shift = 0.0;
    Rng rng(0xc3);
    for (int rep = 0; rep < 1000; ++rep) {
        Matrix u = oracle::random_matrix(8, 4, rng);
        Matrix v = oracle::random_matrix(8, 4, rng);
        worst_kl = std::max(worst_kl, -sdd_loss(u, v, kl));
        if (rep % 10 == 0) {
            worst_self = std::max(worst_self, std::abs(sdd_loss(u, u, kl)));
            worst_self = std::max(worst_self, std::abs(sdd_loss(u, u, mse)));
            worst_mmd = std::max(worst_mmd, std::abs(mkmmd_loss(mk, u, u)));
            worst_sym = std::max(worst_sym, std::abs(sdd_loss(u, v, kl) - sdd_loss(v, u, kl)));
            Matrix us = u;
            Matrix vs = v;
            double shift = rng.uniform(-4.0, 4.0);
            for (int i = 0; i < u.rows(); ++i)
                for (int j = 0; j < u.cols(); ++j) {
                    us(i, j) += shift;
                    vs(i, j) += shift;
                }
            worst_shift =
                std::max(worst_shift, std::abs(sdd_loss(us, vs, kl) - sdd_loss(u, v, kl)));
        }
    }
    bool pass = worst_self == 0.0 && worst_mmd <= 1e-12 && worst_kl <= 1e-10 &&
                worst_sym <= 1e-12 && worst_shift <= 1e-9;
    report(3, "identity/nullity battery", pass,
           "sdd(U,U) " + fmt(worst_self) + " == 0, mkmmd(U,U) " + fmt(worst_mmd) +
               " <= 1e-12, min KL " + fmt(-worst_kl) + " >= -1e-10 (1000 pairs), symmetry " +
               fmt(worst_sym) + " <= 1e-12, shift " + fmt(worst_shift) + " <= 1e-9",
           timer.seconds());
}

// ---------------------------------------------------------------------------
// criterion 4: sampling-size study
// ---------------------------------------------------------------------------

void criterion_4() {
    Timer timer;
    SweepConfig cfg;
    cfg.sizes = {2, 4, 8, 16, 32, 64, 128, 256};
    cfg.dims = {2, 16, 64};
    cfg.trials = 50;
    cfg.seed = 42;
    std::vector<SweepRow> rows = sweep(cfg);

    bool pass = true;
    std::ostringstream detail;
    for (int dim : cfg.dims) {
        double prev = -1.0;
        int inversions = 0;
        double at2 = 0.0;
        double at64 = 0.0;
        for (const SweepRow& row : rows) {
            if (row.dim != dim) continue;
            if (row.size == 2) at2 = row.mean_d;
            if (row.size == 64) at64 = row.mean_d;
            if (prev >= 0.0 && row.mean_d > prev) {
                ++inversions;
                if (row.mean_d - prev >= 0.02 * prev) pass = false;
            }
            prev = row.mean_d;
        }
        if (inversions > 1) pass = false;
        double ratio = at64 / at2;
        if (!(ratio <= 0.05)) pass = false;
        detail << "dim " << dim << ": D(64)/D(2) = " << fmt3(ratio) << " (inversions "
               << inversions << "); ";
    }
    double secs = timer.seconds();
    if (secs >= 120.0) pass = false;
    report(4, "sampling-size study (trials=50, uniform reference)", pass,
           detail.str() + "threshold 0.05", secs);
}

// ---------------------------------------------------------------------------
// criteria 5-7: training studies on the reference generator
// ---------------------------------------------------------------------------

struct RunOutcome {
    double recall1 = 0.0;
    double recall5 = 0.0;
};

RunOutcome run_training(const Dataset& ds, const TrainConfig& cfg, const StreamSpec& sa,
                        const StreamSpec& sb) {
    TwoStreamModel model = TwoStreamModel::init(sa, sb, cfg.seed);
    TrainResult result = train(ds, model, cfg);
    const MetricRecord& last = result.history.back();
    return {(last.recall1_ab + last.recall1_ba) / 2.0, (last.recall5_ab + last.recall5_ba) / 2.0};
}

TrainConfig mode_config(const std::string& mode) {
    TrainConfig cfg;
    if (mode == "clip") {
        cfg.weights = {1.0, 0.0, 0.0, 0.0};
        cfg.use_cl = true;
        cfg.use_unpaired = false;
    } else if (mode == "setclip") {
        cfg.weights = {1.0, 0.1, 1.0, 0.1};
        cfg.use_cl = true;
        cfg.use_unpaired = true;
    } else { // unsup
        cfg.weights = {0.0, 0.1, 1.0, 0.1};
        cfg.use_cl = false;
        cfg.use_unpaired = true;
    }
    return cfg;
}

std::vector<RunOutcome> g_setclip_runs; // shared between criteria 5 and 7
Dataset g_reference_dataset;

void criterion_5() {
    Timer timer;
    SyntheticSpec spec; // reference dataset: library defaults + pinned counts
    spec.pairs = 100;
    spec.unpaired_a = 900;
    spec.unpaired_b = 900;
    spec.test_pairs = 200;
    spec.seed = 42;
    g_reference_dataset = generate(spec);
    const Dataset& ds = g_reference_dataset;
    StreamSpec sa = default_stream(spec.dim_a);
    StreamSpec sb = default_stream(spec.dim_b);

    std::vector<double> set_r1, clip_r1;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainConfig set_cfg = mode_config("setclip");
        set_cfg.seed = seed;
        RunOutcome set_run = run_training(ds, set_cfg, sa, sb);
        g_setclip_runs.push_back(set_run);
        set_r1.push_back(set_run.recall1);

        TrainConfig clip_cfg = mode_config("clip");
        clip_cfg.seed = seed;
        clip_r1.push_back(run_training(ds, clip_cfg, sa, sb).recall1);
    }
    double mean_set = 0.0;
    double mean_clip = 0.0;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < 5; ++i) {
        mean_set += set_r1[i] / 5.0;
        mean_clip += clip_r1[i] / 5.0;
        diffs.push_back(set_r1[i] - clip_r1[i]);
    }
    double p = wilcoxon_one_sided_p(diffs);
    double secs = timer.seconds();
    bool pass = mean_set > mean_clip && p < 0.1 && secs < 600.0;
    std::ostringstream detail;
    detail << "mean recall@1 setclip " << fmt3(mean_set) << " vs clip " << fmt3(mean_clip)
           << ", one-sided Wilcoxon p = " << fmt3(p) << " < 0.1 (5 seeds, 50 epochs)";
    report(5, "semi-supervised benefit", pass, detail.str(), secs);
}

void criterion_6() {
    Timer timer;
    SyntheticSpec spec;
    spec.pairs = 0;
    spec.unpaired_a = 1000;
    spec.unpaired_b = 1000;
    spec.test_pairs = 200;
    spec.seed = 42;
    Dataset ds = generate(spec);
    // linear streams with a narrow latent keep the manifold unfoldable, so the
    // distribution losses alone can pin the correspondence
    StreamSpec sa = linear_stream(spec.dim_a, 4);
    StreamSpec sb = linear_stream(spec.dim_b, 4);

    double mean_r5 = 0.0;
    std::vector<double> per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainConfig cfg = mode_config("unsup");
        cfg.epochs = 100;
        cfg.seed = seed;
        RunOutcome out = run_training(ds, cfg, sa, sb);
        per_seed.push_back(out.recall5);
        mean_r5 += out.recall5 / 5.0;
    }
    double chance = 5.0 / 200.0;
    bool pass = mean_r5 >= 3.0 * chance;
    std::ostringstream detail;
    detail << "mean test recall@5 " << fmt3(mean_r5) << " >= 3x chance " << fmt3(3.0 * chance)
           << " [per seed:";
    for (double r : per_seed) detail << ' ' << fmt3(r);
    detail << "] (N=0, M=1000, mode=unsup, linear streams K=4, 100 epochs)";
    report(6, "zero-paired regime", pass, detail.str(), timer.seconds());
}

void criterion_7() {
    Timer timer;
    const Dataset& ds = g_reference_dataset;
    StreamSpec sa = default_stream(ds.spec.dim_a);
    StreamSpec sb = default_stream(ds.spec.dim_b);

    auto run_ablation = [&](bool rd_on, SddConfig::Divergence div) {
        std::vector<double> r1;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            TrainConfig cfg = mode_config("setclip");
            cfg.sdd.relative_distance = rd_on;
            cfg.sdd.divergence = div;
            cfg.seed = seed;
            r1.push_back(run_training(ds, cfg, sa, sb).recall1);
        }
        double mean = 0.0;
        for (double r : r1) mean += r / 5.0;
        return mean;
    };

    double full = 0.0;
    for (const RunOutcome& out : g_setclip_runs) full += out.recall1 / 5.0; // RD-on/KL
    double rd_off = run_ablation(false, SddConfig::Divergence::Kl);
    double mse = run_ablation(true, SddConfig::Divergence::Mse);

    // hard criterion: full config not worse than either ablation by > 1 point
    bool pass = full >= rd_off - 0.01 && full >= mse - 0.01;
    std::ostringstream detail;
    detail << "mean recall@1 ordering: rd-on/kl " << fmt3(full) << ", rd-off/kl " << fmt3(rd_off)
           << ", rd-on/mse " << fmt3(mse) << " (full within 1 point of both ablations: "
           << (pass ? "yes" : "no") << ")";
    report(7, "ablation direction check", pass, detail.str(), timer.seconds());
}

// ---------------------------------------------------------------------------
// criterion 8: CLI determinism
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void criterion_8(const std::string& cli) {
    Timer timer;
    if (cli.empty()) {
        report(8, "determinism of cmd_train", false, "CLI path not supplied", timer.seconds());
        return;
    }
    fs::path dir = fs::temp_directory_path() / "semalign_acceptance_c8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"seed": 31, "train": {"epochs": 3, "batch_size": 16, "eval_every": 1},
               "data": {"pairs": 30, "unpaired_a": 60, "unpaired_b": 60, "test_pairs": 20}})";
    cfg.close();

    auto sh = [&](const std::string& args) {
        std::string cmd =
            cli + " " + args + " >" + (dir / "log.txt").string() + " 2>&1";
        int rc = std::system(cmd.c_str());
        return rc != -1 && WEXITSTATUS(rc) == 0;
    };
    bool ok = sh("gen-data --config " + (dir / "cfg.json").string() + " --out " +
                 (dir / "ds.bin").string());
    ok = ok && sh("train --config " + (dir / "cfg.json").string() + " --dataset " +
                  (dir / "ds.bin").string() + " --out " + (dir / "run1").string());
    ok = ok && sh("train --config " + (dir / "cfg.json").string() + " --dataset " +
                  (dir / "ds.bin").string() + " --out " + (dir / "run2").string());
    bool identical =
        ok && slurp(dir / "run1/metrics.json") == slurp(dir / "run2/metrics.json") &&
        !slurp(dir / "run1/metrics.json").empty();
    report(8, "determinism of cmd_train", identical,
           ok ? (identical ? "two runs produced byte-identical metric histories"
                           : "metric histories differ")
              : "CLI invocation failed",
           timer.seconds());
}

// ---------------------------------------------------------------------------
// criterion 9: quadratic SDD cost
// ---------------------------------------------------------------------------

void criterion_9() {
    Timer timer;
    SddConfig cfg;
    Rng rng(0xc9);
    Matrix u64 = oracle::random_matrix(64, 8, rng);
    Matrix v64 = oracle::random_matrix(64, 8, rng);
    reset_sdd_kernel_eval_count();
    sdd_loss(u64, v64, cfg);
    double count64 = static_cast<double>(sdd_kernel_eval_count());

    Matrix u128 = oracle::random_matrix(128, 8, rng);
    Matrix v128 = oracle::random_matrix(128, 8, rng);
    reset_sdd_kernel_eval_count();
    sdd_loss(u128, v128, cfg);
    double count128 = static_cast<double>(sdd_kernel_eval_count());

    double ratio = count128 / count64;
    report(9, "quadratic SDD kernel cost", count64 > 0 && ratio <= 4.5,
           "kernel evaluations at B=128 / B=64 = " + fmt3(ratio) + " <= 4.5", timer.seconds());
}

} // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    std::cout << "acceptance suite (9 criteria)\n";
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8(cli);
    criterion_9();
    std::cout << (g_failures == 0 ? "acceptance: ALL CRITERIA PASSED"
                                  : "acceptance: " + std::to_string(g_failures) +
                                        " criterion(s) FAILED")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
