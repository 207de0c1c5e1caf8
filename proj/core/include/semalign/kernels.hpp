#pragma once

#include <vector>

#include "semalign/autodiff.hpp"
#include "semalign/matrix.hpp"

namespace semalign {

/// One base kernel. Gaussian: exp(-||a-b||^2 / (2 gamma_sq)).
/// Polynomial: (<a,b> + coef0)^degree.
struct KernelSpec {
    enum class Family { Gaussian, Polynomial };
    Family family = Family::Gaussian;
    double gamma_sq = 1.0; // Gaussian only, must be > 0
    double coef0 = 1.0;    // Polynomial only
    int degree = 2;        // Polynomial only, must be >= 1

    static KernelSpec gaussian(double gamma_sq);
    static KernelSpec polynomial(double coef0, int degree);

    void validate() const;
};

/// Convex combination of base kernels. The weights live as free logits and
/// are softmaxed, which keeps every beta positive and summing to one.
struct MultiKernel {
    std::vector<KernelSpec> specs;
    std::vector<double> beta_logits;

    std::vector<double> betas() const;
    void validate() const;
};

/// Gram matrix of one base kernel; entry (i,j) = k(a_i, b_j).
Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b);

/// Weighted combination sum_i beta_i * gram(spec_i, a, b).
Matrix multi_gram(const MultiKernel& mk, const Matrix& a, const Matrix& b);

// Tape-based counterparts. `beta_logits` is a 1 x d node so the weights can
// be learned jointly with the encoder parameters.
Var gram(Tape& t, const KernelSpec& spec, Var a, Var b);
Var multi_gram(Tape& t, const std::vector<KernelSpec>& specs, Var beta_logits, Var a, Var b);

} // namespace semalign
