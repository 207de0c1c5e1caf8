#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "semalign/autodiff.hpp"
#include "semalign/errors.hpp"
#include "semalign/matrix.hpp"
#include "semalign/rng.hpp"

using namespace semalign;

namespace {

/// Reverse-mode vs central finite differences for a scalar graph over one or
/// two free matrices. Returns the worst Frobenius relative error.
double check_grad(const std::function<Var(Tape&, std::vector<Var>&)>& build,
                  std::vector<Matrix> inputs) {
    std::vector<Param> params;
    params.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        params.emplace_back("p" + std::to_string(i), inputs[i]);
    }
    Tape t;
    std::vector<Var> vars;
    for (Param& p : params) vars.push_back(t.leaf(p));
    Var loss = build(t, vars);
    std::vector<Param*> ptrs;
    for (Param& p : params) ptrs.push_back(&p);
    value_and_grad(t, loss, std::span<Param* const>(ptrs));

    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Matrix fd = finite_diff_grad(
            [&](const Matrix& x) {
                Tape tt;
                std::vector<Var> vs;
                for (std::size_t k = 0; k < inputs.size(); ++k) {
                    vs.push_back(tt.constant(k == i ? x : inputs[k]));
                }
                return tt.scalar_value(build(tt, vs));
            },
            inputs[i]);
        worst = std::max(worst, oracle::grad_rel_error(params[i].grad, fd));
    }
    return worst;
}

/// Weighted sum with a frozen weight matrix turns any matrix output into a
/// scalar with nontrivial adjoints. The weights must not change between the
/// reverse pass and the finite-difference evaluations.
Var weighted(Tape& t, Var m, const Matrix& w) {
    return t.sum_all(t.mul(m, t.constant(w)));
}

Matrix probe_weights(int rows, int cols, Rng& rng) {
    Matrix w(rows, cols);
    for (double& x : w.data()) x = rng.uniform(-1.0, 1.0);
    return w;
}

} // namespace

TEST_CASE("every primitive matches central finite differences") {
    Rng seed_rng(100);
    const double tol = 1e-5;

    auto run2 = [&](const std::string& name, auto op, int rows_a, int cols_a, int rows_b,
                    int cols_b, double lo = -2.0, double hi = 2.0) {
        CAPTURE(name);
        Rng rng = seed_rng.derive(std::hash<std::string>{}(name));
        Matrix a = oracle::random_matrix(rows_a, cols_a, rng, lo, hi);
        Matrix b = oracle::random_matrix(rows_b, cols_b, rng, lo, hi);
        Rng wrng = rng.derive(1);
        Matrix w;
        bool w_ready = false;
        double err = check_grad(
            [&](Tape& t, std::vector<Var>& vs) {
                Var out = op(t, vs[0], vs[1]);
                if (!w_ready) {
                    w = probe_weights(t.value(out).rows(), t.value(out).cols(), wrng);
                    w_ready = true;
                }
                return weighted(t, out, w);
            },
            {a, b});
        CHECK(err < tol);
    };
    auto run1 = [&](const std::string& name, auto op, int rows, int cols, double lo = -2.0,
                    double hi = 2.0) {
        CAPTURE(name);
        Rng rng = seed_rng.derive(std::hash<std::string>{}(name));
        Matrix a = oracle::random_matrix(rows, cols, rng, lo, hi);
        Rng wrng = rng.derive(1);
        Matrix w;
        bool w_ready = false;
        double err = check_grad(
            [&](Tape& t, std::vector<Var>& vs) {
                Var out = op(t, vs[0]);
                if (!w_ready) {
                    w = probe_weights(t.value(out).rows(), t.value(out).cols(), wrng);
                    w_ready = true;
                }
                return weighted(t, out, w);
            },
            {a});
        CHECK(err < tol);
    };

    run2("add", [](Tape& t, Var a, Var b) { return t.add(a, b); }, 3, 4, 3, 4);
    run2("sub", [](Tape& t, Var a, Var b) { return t.sub(a, b); }, 3, 4, 3, 4);
    run2("mul", [](Tape& t, Var a, Var b) { return t.mul(a, b); }, 3, 4, 3, 4);
    run2("matmul", [](Tape& t, Var a, Var b) { return t.matmul(a, b); }, 3, 4, 4, 5);
    run1("transpose", [](Tape& t, Var a) { return t.transpose(a); }, 3, 4);
    run2("add_rowvec", [](Tape& t, Var a, Var b) { return t.add_rowvec(a, b); }, 4, 3, 1, 3);
    run1("scale", [](Tape& t, Var a) { return t.scale(a, -1.7); }, 3, 4);
    run1("add_const", [](Tape& t, Var a) { return t.add_const(a, 0.9); }, 3, 4);
    run1("tanh", [](Tape& t, Var a) { return t.tanh(a); }, 3, 4);
    run1("relu", [](Tape& t, Var a) { return t.relu(a); }, 3, 4, 0.1, 2.0); // away from kink
    run1("exp", [](Tape& t, Var a) { return t.exp(a); }, 3, 4);
    run1("log", [](Tape& t, Var a) { return t.log(a); }, 3, 4, 0.2, 3.0);
    run1("pow_int", [](Tape& t, Var a) { return t.pow_int(a, 3); }, 3, 4);
    run1("clamp_min", [](Tape& t, Var a) { return t.clamp_min(a, -5.0); }, 3, 4);
    run1("clamp", [](Tape& t, Var a) { return t.clamp(a, -5.0, 5.0); }, 3, 4);
    run2("mul_scalar", [](Tape& t, Var a, Var s) { return t.mul_scalar(a, s); }, 3, 4, 1, 1);
    run2("div_scalar", [](Tape& t, Var a, Var s) { return t.div_scalar(a, s); }, 3, 4, 1, 1, 0.5,
         2.0);
    run1("sum_all", [](Tape& t, Var a) { return t.sum_all(a); }, 3, 4);
    run1("mean_all", [](Tape& t, Var a) { return t.mean_all(a); }, 3, 4);
    run1("row_sums", [](Tape& t, Var a) { return t.row_sums(a); }, 3, 4);
    run1("sum_diag", [](Tape& t, Var a) { return t.sum_diag(a); }, 4, 4);
    run1("logsumexp_rows", [](Tape& t, Var a) { return t.logsumexp_rows(a); }, 3, 4);
    run1("row_softmax", [](Tape& t, Var a) { return t.row_softmax(a); }, 3, 4);
    run1("slice_rows", [](Tape& t, Var a) { return t.slice_rows(a, 1, 2); }, 4, 3);
    run2("concat_cols", [](Tape& t, Var a, Var b) { return t.concat_cols(a, b); }, 3, 2, 3, 4);
    run1("diag_col", [](Tape& t, Var a) { return t.diag_col(a); }, 4, 4);
    run1("entry", [](Tape& t, Var a) { return t.entry(a, 1, 2); }, 3, 4);
    run2("pairwise_sq_dists", [](Tape& t, Var a, Var b) { return t.pairwise_sq_dists(a, b); }, 3,
         4, 5, 4);
    run2("cosine_similarity", [](Tape& t, Var a, Var b) { return t.cosine_similarity(a, b); }, 3,
         4, 5, 4);
    run1("batch_variance", [](Tape& t, Var a) { return t.batch_variance(a); }, 5, 3);
}

TEST_CASE("quadratic form gradient is the matrix itself") {
    Param w("w", Matrix::identity(2));
    Tape t;
    Var lw = t.leaf(w);
    Var loss = t.scale(t.sum_all(t.mul(lw, lw)), 0.5);
    double v = value_and_grad(t, loss, {&w});
    CHECK(v == doctest::Approx(1.0));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(w.grad(i, j) == doctest::Approx(w.value(i, j)).epsilon(1e-12));
}

TEST_CASE("tanh gradient at zero is all ones") {
    Param w("w", Matrix(2, 3));
    Tape t;
    Var loss = t.sum_all(t.tanh(t.leaf(w)));
    value_and_grad(t, loss, {&w});
    for (double g : w.grad.data()) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient of a sum of losses equals the sum of gradients") {
    Rng rng(101);
    Matrix a0 = oracle::random_matrix(4, 3, rng);

    auto grad_of = [&](int which) {
        Param p("p", a0);
        Tape t;
        Var x = t.leaf(p);
        Var l1 = t.sum_all(t.tanh(x));
        Var l2 = t.mean_all(t.pairwise_sq_dists(x, x));
        Var loss = which == 0 ? l1 : (which == 1 ? l2 : t.add(l1, l2));
        value_and_grad(t, loss, {&p});
        return p.grad;
    };
    Matrix g1 = grad_of(0);
    Matrix g2 = grad_of(1);
    Matrix gsum = grad_of(2);
    for (std::size_t i = 0; i < gsum.size(); ++i) {
        CHECK(std::abs(gsum.data()[i] - (g1.data()[i] + g2.data()[i])) <= 1e-10);
    }
}

TEST_CASE("two identical passes produce bit-identical gradients") {
    Rng rng(102);
    Matrix a0 = oracle::random_matrix(5, 4, rng);
    auto pass = [&]() {
        Param p("p", a0);
        Tape t;
        Var x = t.leaf(p);
        Var loss = t.sum_all(t.exp(t.scale(t.pairwise_sq_dists(x, x), -0.25)));
        value_and_grad(t, loss, {&p});
        return p.grad;
    };
    Matrix g1 = pass();
    Matrix g2 = pass();
    CHECK(g1 == g2); // exact bitwise equality via operator==
}

TEST_CASE("leaf caching accumulates shared-parameter gradients once") {
    Param p("p", Matrix::constant(1, 1, 2.0));
    Tape t;
    Var x1 = t.leaf(p);
    Var x2 = t.leaf(p);
    CHECK(x1.id == x2.id);
    Var loss = t.mul(x1, x2); // p^2 -> dp = 2p = 4
    value_and_grad(t, loss, {&p});
    CHECK(p.grad(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("graph construction validates shapes and state") {
    Tape t;
    Var a = t.constant(Matrix(2, 3));
    Var b = t.constant(Matrix(3, 2));
    CHECK_THROWS_AS(t.add(a, b), DimensionError);
    CHECK_THROWS_AS(t.sum_diag(a), DimensionError);
    CHECK_THROWS_AS(t.log(t.constant(Matrix::constant(1, 1, -1.0))), ValueError);

    Var loss = t.sum_all(a);
    t.backward(loss);
    CHECK_THROWS_AS(t.backward(loss), ValueError); // one backward per tape
}
