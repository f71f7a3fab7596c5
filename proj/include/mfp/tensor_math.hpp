#pragma once

#include "mfp/tensor.hpp"

#include <cstddef>
#include <span>

namespace mfp {

/// Strided single-precision GEMM: C[m x n] = A[m x k] * op(B).
///
/// `b_transposed == false` reads B as row-major [k x n] with row stride `ldb`;
/// `true` reads it as row-major [n x k] (the nn.Linear weight layout) and uses
/// its transpose. When `accumulate` is set the product is added to C instead of
/// overwriting it.
///
/// Every output element is accumulated in fp32 over t = 0..k-1 in ascending
/// order (fused multiply-add when the target has FMA), independent of blocking,
/// so results are bit-reproducible for a given build.
void gemm(std::size_t m, std::size_t n, std::size_t k,
          const float* a, std::size_t lda,
          const float* b, std::size_t ldb, bool b_transposed,
          float* c, std::size_t ldc, bool accumulate = false);

Tensor matmul(const Tensor& a, const Tensor& b);

// y = x * W^T + bias with W stored as [out x in].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Normalizes over the last axis using the population variance; eps is
// added before the square root. A zero denominator collapses to beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps);
void layer_norm_rows(std::span<const float> x, std::size_t rows, std::size_t width,
                     std::span<const float> gamma, std::span<const float> beta, float eps,
                     std::span<float> out);

Tensor softmax(const Tensor& x, std::size_t axis);
void softmax_inplace(std::span<float> row);

// Exact erf-based GELU: x * Phi(x).
Tensor gelu(const Tensor& x);
void gelu_inplace(std::span<float> values);

double mse(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);

struct CosineResult {
    double value = 0.0;
    bool degenerate = false;  // one of the inputs had zero norm; value is then 0
};

CosineResult cosine_similarity(std::span<const float> u, std::span<const float> v);
CosineResult cosine_similarity(const Tensor& u, const Tensor& v);

double frobenius_norm(const Tensor& m);

struct PcaResult {
    Tensor components;   // [k x d], orthonormal rows
    Tensor projected;    // [n x k], centered rows times components^T
    Tensor eigenvalues;  // [k], nonincreasing
    // Number of trailing components whose eigenvalue is numerically zero;
    // those directions are an arbitrary orthonormal completion.
    std::size_t null_components = 0;
};

/// Principal components of `rows` [n x d]. Rows are centered by the column
/// mean, the d x d covariance (divided by n) is diagonalized with a cyclic
/// Jacobi sweep, and each component's largest-magnitude coefficient is made
/// positive.
PcaResult pca_top_k(const Tensor& rows, std::size_t k);

struct SymmetricEigen {
    std::vector<double> values;   // descending
    std::vector<double> vectors;  // row i is the unit eigenvector for values[i]
};

// Cyclic Jacobi eigen-decomposition of a symmetric n x n matrix (row-major).
SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n);

} // namespace mfp
