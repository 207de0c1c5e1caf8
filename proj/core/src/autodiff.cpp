#include "semalign/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semalign/errors.hpp"

namespace semalign {

namespace {

enum class Op {
    Leaf,
    Constant,
    Add,
    Sub,
    Mul,
    MatMul,
    Transpose,
    AddRowVec,
    Scale,
    AddConst,
    Tanh,
    Relu,
    Exp,
    Log,
    PowInt,
    ClampMin,
    Clamp,
    MulScalar,
    DivScalar,
    SumAll,
    MeanAll,
    RowSums,
    SumDiag,
    LogSumExpRows,
    RowSoftmax,
    SliceRows,
    ConcatCols,
    DiagCol,
    Entry,
    PairwiseSqDists,
    CosineSim,
    BatchVariance,
};

} // namespace

struct Tape::Node {
    Op op;
    int a = -1;
    int b = -1;
    Matrix value;
    Matrix adjoint;
    double c0 = 0.0;
    double c1 = 0.0;
    int i0 = 0;
    int i1 = 0;
    Param* param = nullptr;
    Matrix aux0; // op-specific cache (e.g. row norms)
    Matrix aux1;
};

Tape::Tape() = default;
Tape::~Tape() = default;

std::size_t Tape::node_count() const { return nodes_.size(); }

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()) + ")");
    }
}

void check_scalar(const Matrix& s, const char* op) {
    if (s.rows() != 1 || s.cols() != 1) {
        throw DimensionError(std::string(op) + ": expected 1x1 scalar node, got " +
                             std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
    }
}

} // namespace

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::at(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw ValueError("Tape: invalid node handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::leaf(Param& p) {
    for (const auto& [param, id] : param_leaves_) {
        if (param == &p) return Var{id};
    }
    Node n;
    n.op = Op::Leaf;
    n.value = p.value;
    n.param = &p;
    Var v = push(std::move(n));
    param_leaves_.emplace_back(&p, v.id);
    return v;
}

Var Tape::constant(Matrix value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant_scalar(double value) { return constant(Matrix::constant(1, 1, value)); }

Var Tape::add(Var a, Var b) {
    check_same_shape(at(a).value, at(b).value, "add");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.value = semalign::add(at(a).value, at(b).value);
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(at(a).value, at(b).value, "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.value = semalign::sub(at(a).value, at(b).value);
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(at(a).value, at(b).value, "mul");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.value = hadamard(at(a).value, at(b).value);
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.value = semalign::matmul(at(a).value, at(b).value);
    return push(std::move(n));
}

Var Tape::transpose(Var a) {
    Node n;
    n.op = Op::Transpose;
    n.a = a.id;
    n.value = semalign::transpose(at(a).value);
    return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var b) {
    const Matrix& av = at(a).value;
    const Matrix& bv = at(b).value;
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw DimensionError("add_rowvec: bias must be 1x" + std::to_string(av.cols()));
    }
    Node n;
    n.op = Op::AddRowVec;
    n.a = a.id;
    n.b = b.id;
    Matrix out = av;
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.c0 = c;
    n.value = semalign::scale(at(a).value, c);
    return push(std::move(n));
}

Var Tape::add_const(Var a, double c) {
    Node n;
    n.op = Op::AddConst;
    n.a = a.id;
    n.c0 = c;
    Matrix out = at(a).value;
    for (double& v : out.data()) v += c;
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a.id;
    Matrix out = at(a).value;
    for (double& v : out.data()) v = std::tanh(v);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    Node n;
    n.op = Op::Relu;
    n.a = a.id;
    Matrix out = at(a).value;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::exp(Var a) {
    Node n;
    n.op = Op::Exp;
    n.a = a.id;
    Matrix out = at(a).value;
    for (double& v : out.data()) v = std::exp(v);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::log(Var a) {
    Node n;
    n.op = Op::Log;
    n.a = a.id;
    Matrix out = at(a).value;
    for (double& v : out.data()) {
        if (v <= 0.0) throw ValueError("log: non-positive entry " + std::to_string(v));
        v = std::log(v);
    }
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::pow_int(Var a, int degree) {
    if (degree < 1) throw ValueError("pow_int: degree must be >= 1");
    Node n;
    n.op = Op::PowInt;
    n.a = a.id;
    n.i0 = degree;
    Matrix out = at(a).value;
    for (double& v : out.data()) {
        double base = v;
        double acc = base;
        for (int d = 1; d < degree; ++d) acc *= base;
        v = acc;
    }
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::clamp_min(Var a, double lo) {
    Node n;
    n.op = Op::ClampMin;
    n.a = a.id;
    n.c0 = lo;
    Matrix out = at(a).value;
    for (double& v : out.data()) v = std::max(v, lo);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::clamp(Var a, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.a = a.id;
    n.c0 = lo;
    n.c1 = hi;
    Matrix out = at(a).value;
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::mul_scalar(Var a, Var s) {
    check_scalar(at(s).value, "mul_scalar");
    Node n;
    n.op = Op::MulScalar;
    n.a = a.id;
    n.b = s.id;
    n.value = semalign::scale(at(a).value, at(s).value(0, 0));
    return push(std::move(n));
}

Var Tape::div_scalar(Var a, Var s) {
    check_scalar(at(s).value, "div_scalar");
    double denom = at(s).value(0, 0);
    if (denom == 0.0) throw ValueError("div_scalar: division by zero");
    Node n;
    n.op = Op::DivScalar;
    n.a = a.id;
    n.b = s.id;
    n.value = semalign::scale(at(a).value, 1.0 / denom);
    return push(std::move(n));
}

Var Tape::sum_all(Var a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a.id;
    n.value = Matrix::constant(1, 1, semalign::sum(at(a).value));
    return push(std::move(n));
}

Var Tape::mean_all(Var a) {
    const Matrix& av = at(a).value;
    if (av.size() == 0) throw ValueError("mean_all: empty matrix");
    Node n;
    n.op = Op::MeanAll;
    n.a = a.id;
    n.value = Matrix::constant(1, 1, semalign::sum(av) / static_cast<double>(av.size()));
    return push(std::move(n));
}

Var Tape::row_sums(Var a) {
    Node n;
    n.op = Op::RowSums;
    n.a = a.id;
    n.value = semalign::row_sums(at(a).value);
    return push(std::move(n));
}

Var Tape::sum_diag(Var a) {
    const Matrix& av = at(a).value;
    if (av.rows() != av.cols()) throw DimensionError("sum_diag: matrix must be square");
    double s = 0.0;
    for (int i = 0; i < av.rows(); ++i) s += av(i, i);
    Node n;
    n.op = Op::SumDiag;
    n.a = a.id;
    n.value = Matrix::constant(1, 1, s);
    return push(std::move(n));
}

Var Tape::logsumexp_rows(Var a) {
    Node n;
    n.op = Op::LogSumExpRows;
    n.a = a.id;
    n.value = semalign::logsumexp_rows(at(a).value);
    return push(std::move(n));
}

Var Tape::row_softmax(Var a) {
    const Matrix& av = at(a).value;
    if (av.cols() == 0) throw ValueError("row_softmax: empty rows");
    Matrix out(av.rows(), av.cols());
    for (int i = 0; i < av.rows(); ++i) {
        double mx = av(i, 0);
        for (int j = 1; j < av.cols(); ++j) mx = std::max(mx, av(i, j));
        double denom = 0.0;
        for (int j = 0; j < av.cols(); ++j) denom += std::exp(av(i, j) - mx);
        for (int j = 0; j < av.cols(); ++j) out(i, j) = std::exp(av(i, j) - mx) / denom;
    }
    Node n;
    n.op = Op::RowSoftmax;
    n.a = a.id;
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::slice_rows(Var a, int begin, int count) {
    const Matrix& av = at(a).value;
    if (begin < 0 || count < 0 || begin + count > av.rows()) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                             std::to_string(begin + count) + ") out of " +
                             std::to_string(av.rows()) + " rows");
    }
    Matrix out(count, av.cols());
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < av.cols(); ++j) out(i, j) = av(begin + i, j);
    Node n;
    n.op = Op::SliceRows;
    n.a = a.id;
    n.i0 = begin;
    n.i1 = count;
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix& av = at(a).value;
    const Matrix& bv = at(b).value;
    if (av.rows() != bv.rows()) throw DimensionError("concat_cols: row mismatch");
    Matrix out(av.rows(), av.cols() + bv.cols());
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out(i, j) = av(i, j);
        for (int j = 0; j < bv.cols(); ++j) out(i, av.cols() + j) = bv(i, j);
    }
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.i0 = av.cols();
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::diag_col(Var a) {
    const Matrix& av = at(a).value;
    if (av.rows() != av.cols()) throw DimensionError("diag_col: matrix must be square");
    Matrix out(av.rows(), 1);
    for (int i = 0; i < av.rows(); ++i) out(i, 0) = av(i, i);
    Node n;
    n.op = Op::DiagCol;
    n.a = a.id;
    n.value = std::move(out);
    return push(std::move(n));
}

Var Tape::entry(Var a, int i, int j) {
    const Matrix& av = at(a).value;
    if (i < 0 || j < 0 || i >= av.rows() || j >= av.cols()) {
        throw DimensionError("entry: index out of range");
    }
    Node n;
    n.op = Op::Entry;
    n.a = a.id;
    n.i0 = i;
    n.i1 = j;
    n.value = Matrix::constant(1, 1, av(i, j));
    return push(std::move(n));
}

Var Tape::pairwise_sq_dists(Var a, Var b) {
    Node n;
    n.op = Op::PairwiseSqDists;
    n.a = a.id;
    n.b = b.id;
    n.value = semalign::pairwise_sq_dists(at(a).value, at(b).value);
    return push(std::move(n));
}

Var Tape::cosine_similarity(Var a, Var b) {
    const Matrix& av = at(a).value;
    const Matrix& bv = at(b).value;
    if (av.cols() != bv.cols()) throw DimensionError("cosine_similarity: column mismatch");
    Matrix na(1, av.rows());
    Matrix nb(1, bv.rows());
    for (int i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (int k = 0; k < av.cols(); ++k) s += av(i, k) * av(i, k);
        na(0, i) = std::max(std::sqrt(s), kNormFloor);
    }
    for (int j = 0; j < bv.rows(); ++j) {
        double s = 0.0;
        for (int k = 0; k < bv.cols(); ++k) s += bv(j, k) * bv(j, k);
        nb(0, j) = std::max(std::sqrt(s), kNormFloor);
    }
    Matrix out(av.rows(), bv.rows());
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < bv.rows(); ++j) {
            double dot = 0.0;
            for (int k = 0; k < av.cols(); ++k) dot += av(i, k) * bv(j, k);
            out(i, j) = dot / (na(0, i) * nb(0, j));
        }
    }
    Node n;
    n.op = Op::CosineSim;
    n.a = a.id;
    n.b = b.id;
    n.value = std::move(out);
    n.aux0 = std::move(na);
    n.aux1 = std::move(nb);
    return push(std::move(n));
}

Var Tape::batch_variance(Var a) {
    Node n;
    n.op = Op::BatchVariance;
    n.a = a.id;
    n.value = Matrix::constant(1, 1, semalign::batch_variance(at(a).value));
    n.aux0 = mean_row(at(a).value);
    return push(std::move(n));
}

const Matrix& Tape::value(Var v) const { return at(v).value; }

double Tape::scalar_value(Var v) const {
    check_scalar(at(v).value, "scalar_value");
    return at(v).value(0, 0);
}

const Matrix& Tape::adjoint(Var v) const {
    const Node& n = at(v);
    if (n.adjoint.size() == 0) throw ValueError("adjoint: backward() has not run");
    return n.adjoint;
}

void Tape::backward(Var loss) {
    if (backward_done_) throw ValueError("backward: tape already propagated once");
    backward_done_ = true;
    check_scalar(at(loss).value, "backward");

    for (Node& n : nodes_) n.adjoint = Matrix(n.value.rows(), n.value.cols());
    nodes_[static_cast<std::size_t>(loss.id)].adjoint(0, 0) = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Matrix& dy = n.adjoint;
        switch (n.op) {
        case Op::Leaf:
        case Op::Constant:
            break;
        case Op::Add: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da.data()[i] += dy.data()[i];
                db.data()[i] += dy.data()[i];
            }
            break;
        }
        case Op::Sub: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da.data()[i] += dy.data()[i];
                db.data()[i] -= dy.data()[i];
            }
            break;
        }
        case Op::Mul: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            const Matrix& av = nodes_[n.a].value;
            const Matrix& bv = nodes_[n.b].value;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da.data()[i] += dy.data()[i] * bv.data()[i];
                db.data()[i] += dy.data()[i] * av.data()[i];
            }
            break;
        }
        case Op::MatMul: {
            const Matrix& av = nodes_[n.a].value;
            const Matrix& bv = nodes_[n.b].value;
            Matrix da = semalign::matmul(dy, semalign::transpose(bv));
            Matrix db = semalign::matmul(semalign::transpose(av), dy);
            nodes_[n.a].adjoint = semalign::add(nodes_[n.a].adjoint, da);
            nodes_[n.b].adjoint = semalign::add(nodes_[n.b].adjoint, db);
            break;
        }
        case Op::Transpose: {
            Matrix& da = nodes_[n.a].adjoint;
            for (int i = 0; i < dy.rows(); ++i)
                for (int j = 0; j < dy.cols(); ++j) da(j, i) += dy(i, j);
            break;
        }
        case Op::AddRowVec: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            for (int i = 0; i < dy.rows(); ++i)
                for (int j = 0; j < dy.cols(); ++j) {
                    da(i, j) += dy(i, j);
                    db(0, j) += dy(i, j);
                }
            break;
        }
        case Op::Scale: {
            Matrix& da = nodes_[n.a].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i) da.data()[i] += n.c0 * dy.data()[i];
            break;
        }
        case Op::AddConst: {
            Matrix& da = nodes_[n.a].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i) da.data()[i] += dy.data()[i];
            break;
        }
        case Op::Tanh: {
            Matrix& da = nodes_[n.a].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                double y = n.value.data()[i];
                da.data()[i] += dy.data()[i] * (1.0 - y * y);
            }
            break;
        }
        case Op::Relu: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                if (av.data()[i] > 0.0) da.data()[i] += dy.data()[i];
            }
            break;
        }
        case Op::Exp: {
            Matrix& da = nodes_[n.a].adjoint;
            for (std::size_t i = 0; i < dy.size(); ++i)
                da.data()[i] += dy.data()[i] * n.value.data()[i];
            break;
        }
        case Op::Log: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (std::size_t i = 0; i < dy.size(); ++i)
                da.data()[i] += dy.data()[i] / av.data()[i];
            break;
        }
        case Op::PowInt: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                double base = av.data()[i];
                double p = 1.0;
                for (int d = 1; d < n.i0; ++d) p *= base;
                da.data()[i] += dy.data()[i] * n.i0 * p;
            }
            break;
        }
        case Op::ClampMin: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                if (av.data()[i] > n.c0) da.data()[i] += dy.data()[i];
            }
            break;
        }
        case Op::Clamp: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                double v = av.data()[i];
                if (v > n.c0 && v < n.c1) da.data()[i] += dy.data()[i];
            }
            break;
        }
        case Op::MulScalar: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& ds = nodes_[n.b].adjoint;
            const Matrix& av = nodes_[n.a].value;
            double s = nodes_[n.b].value(0, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da.data()[i] += dy.data()[i] * s;
                acc += dy.data()[i] * av.data()[i];
            }
            ds(0, 0) += acc;
            break;
        }
        case Op::DivScalar: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& ds = nodes_[n.b].adjoint;
            double s = nodes_[n.b].value(0, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da.data()[i] += dy.data()[i] / s;
                acc += dy.data()[i] * n.value.data()[i];
            }
            ds(0, 0) -= acc / s;
            break;
        }
        case Op::SumAll: {
            Matrix& da = nodes_[n.a].adjoint;
            double g = dy(0, 0);
            for (double& v : da.data()) v += g;
            break;
        }
        case Op::MeanAll: {
            Matrix& da = nodes_[n.a].adjoint;
            double g = dy(0, 0) / static_cast<double>(da.size());
            for (double& v : da.data()) v += g;
            break;
        }
        case Op::RowSums: {
            Matrix& da = nodes_[n.a].adjoint;
            for (int i = 0; i < da.rows(); ++i) {
                double g = dy(i, 0);
                for (int j = 0; j < da.cols(); ++j) da(i, j) += g;
            }
            break;
        }
        case Op::SumDiag: {
            Matrix& da = nodes_[n.a].adjoint;
            double g = dy(0, 0);
            for (int i = 0; i < da.rows(); ++i) da(i, i) += g;
            break;
        }
        case Op::LogSumExpRows: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            for (int i = 0; i < av.rows(); ++i) {
                double g = dy(i, 0);
                if (g == 0.0) continue;
                double lse = n.value(i, 0);
                for (int j = 0; j < av.cols(); ++j)
                    da(i, j) += g * std::exp(av(i, j) - lse);
            }
            break;
        }
        case Op::RowSoftmax: {
            Matrix& da = nodes_[n.a].adjoint;
            for (int i = 0; i < dy.rows(); ++i) {
                double dot = 0.0;
                for (int k = 0; k < dy.cols(); ++k) dot += dy(i, k) * n.value(i, k);
                for (int j = 0; j < dy.cols(); ++j)
                    da(i, j) += n.value(i, j) * (dy(i, j) - dot);
            }
            break;
        }
        case Op::SliceRows: {
            Matrix& da = nodes_[n.a].adjoint;
            for (int i = 0; i < n.i1; ++i)
                for (int j = 0; j < dy.cols(); ++j) da(n.i0 + i, j) += dy(i, j);
            break;
        }
        case Op::ConcatCols: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            for (int i = 0; i < dy.rows(); ++i) {
                for (int j = 0; j < n.i0; ++j) da(i, j) += dy(i, j);
                for (int j = 0; j < db.cols(); ++j) db(i, j) += dy(i, n.i0 + j);
            }
            break;
        }
        case Op::DiagCol: {
            Matrix& da = nodes_[n.a].adjoint;
            for (int i = 0; i < dy.rows(); ++i) da(i, i) += dy(i, 0);
            break;
        }
        case Op::Entry: {
            Matrix& da = nodes_[n.a].adjoint;
            da(n.i0, n.i1) += dy(0, 0);
            break;
        }
        case Op::PairwiseSqDists: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            const Matrix& av = nodes_[n.a].value;
            const Matrix& bv = nodes_[n.b].value;
            // d/da_ik = sum_j dy_ij * 2 (a_ik - b_jk); symmetric for b
            for (int i = 0; i < av.rows(); ++i) {
                for (int j = 0; j < bv.rows(); ++j) {
                    double g = 2.0 * dy(i, j);
                    if (g == 0.0) continue;
                    for (int k = 0; k < av.cols(); ++k) {
                        double diff = av(i, k) - bv(j, k);
                        da(i, k) += g * diff;
                        db(j, k) -= g * diff;
                    }
                }
            }
            break;
        }
        case Op::CosineSim: {
            Matrix& da = nodes_[n.a].adjoint;
            Matrix& db = nodes_[n.b].adjoint;
            const Matrix& av = nodes_[n.a].value;
            const Matrix& bv = nodes_[n.b].value;
            const Matrix& na = n.aux0;
            const Matrix& nb = n.aux1;
            // dY_ij/da_i = b_j/(na_i nb_j) - [na_i not floored] * Y_ij a_i / na_i^2
            for (int i = 0; i < av.rows(); ++i) {
                double nai = na(0, i);
                bool a_live = nai > kNormFloor;
                for (int j = 0; j < bv.rows(); ++j) {
                    double g = dy(i, j);
                    if (g == 0.0) continue;
                    double nbj = nb(0, j);
                    double y = n.value(i, j);
                    double inv = 1.0 / (nai * nbj);
                    bool b_live = nbj > kNormFloor;
                    for (int k = 0; k < av.cols(); ++k) {
                        double ga = bv(j, k) * inv;
                        if (a_live) ga -= y * av(i, k) / (nai * nai);
                        da(i, k) += g * ga;
                        double gb = av(i, k) * inv;
                        if (b_live) gb -= y * bv(j, k) / (nbj * nbj);
                        db(j, k) += g * gb;
                    }
                }
            }
            break;
        }
        case Op::BatchVariance: {
            Matrix& da = nodes_[n.a].adjoint;
            const Matrix& av = nodes_[n.a].value;
            const Matrix& mean = n.aux0;
            double g = dy(0, 0) * 2.0 / (av.rows() - 1);
            for (int i = 0; i < av.rows(); ++i)
                for (int k = 0; k < av.cols(); ++k) da(i, k) += g * (av(i, k) - mean(0, k));
            break;
        }
        }
    }

    for (const auto& [param, id] : param_leaves_) {
        Param* p = nodes_[static_cast<std::size_t>(id)].param;
        p->grad = semalign::add(p->grad, nodes_[static_cast<std::size_t>(id)].adjoint);
    }
}

double value_and_grad(Tape& tape, Var loss, std::span<Param* const> params) {
    for (Param* p : params) p->zero_grad();
    double v = tape.scalar_value(loss);
    tape.backward(loss);
    return v;
}

double value_and_grad(Tape& tape, Var loss, std::initializer_list<Param*> params) {
    std::vector<Param*> ps(params);
    return value_and_grad(tape, loss, std::span<Param* const>(ps));
}

} // namespace semalign
