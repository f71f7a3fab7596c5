#include "mfp/tensor_math.hpp"

#include "mfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define MFP_HAVE_AVX2_FMA 1
#endif

namespace mfp {

namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 512;

inline float madd(float a, float b, float c) {
#if defined(__FMA__)
    return std::fmaf(a, b, c);
#else
    return a * b + c;
#endif
}

// Scalar tile used for ragged edges; same per-element order as the vector tile.
void kernel_edge(std::size_t kc, std::size_t mr, std::size_t nr, const float* a, std::size_t lda,
                 const float* bp, float* c, std::size_t ldc, bool load_c) {
    for (std::size_t i = 0; i < mr; ++i) {
        for (std::size_t j = 0; j < nr; ++j) {
            float acc = load_c ? c[i * ldc + j] : 0.0f;
            const float* ai = a + i * lda;
            for (std::size_t t = 0; t < kc; ++t) {
                acc = madd(ai[t], bp[t * kNr + j], acc);
            }
            c[i * ldc + j] = acc;
        }
    }
}

#ifdef MFP_HAVE_AVX2_FMA
void kernel_6x16(std::size_t kc, const float* a, std::size_t lda, const float* bp, float* c,
                 std::size_t ldc, bool load_c) {
    __m256 c00, c01, c10, c11, c20, c21, c30, c31, c40, c41, c50, c51;
    if (load_c) {
        c00 = _mm256_loadu_ps(c + 0 * ldc); c01 = _mm256_loadu_ps(c + 0 * ldc + 8);
        c10 = _mm256_loadu_ps(c + 1 * ldc); c11 = _mm256_loadu_ps(c + 1 * ldc + 8);
        c20 = _mm256_loadu_ps(c + 2 * ldc); c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
        c30 = _mm256_loadu_ps(c + 3 * ldc); c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
        c40 = _mm256_loadu_ps(c + 4 * ldc); c41 = _mm256_loadu_ps(c + 4 * ldc + 8);
        c50 = _mm256_loadu_ps(c + 5 * ldc); c51 = _mm256_loadu_ps(c + 5 * ldc + 8);
    } else {
        c00 = c01 = c10 = c11 = c20 = c21 = _mm256_setzero_ps();
        c30 = c31 = c40 = c41 = c50 = c51 = _mm256_setzero_ps();
    }
    const float* a0 = a;
    const float* a1 = a + lda;
    const float* a2 = a + 2 * lda;
    const float* a3 = a + 3 * lda;
    const float* a4 = a + 4 * lda;
    const float* a5 = a + 5 * lda;
    for (std::size_t t = 0; t < kc; ++t) {
        const __m256 b0 = _mm256_load_ps(bp + t * kNr);
        const __m256 b1 = _mm256_load_ps(bp + t * kNr + 8);
        __m256 av = _mm256_broadcast_ss(a0 + t);
        c00 = _mm256_fmadd_ps(av, b0, c00); c01 = _mm256_fmadd_ps(av, b1, c01);
        av = _mm256_broadcast_ss(a1 + t);
        c10 = _mm256_fmadd_ps(av, b0, c10); c11 = _mm256_fmadd_ps(av, b1, c11);
        av = _mm256_broadcast_ss(a2 + t);
        c20 = _mm256_fmadd_ps(av, b0, c20); c21 = _mm256_fmadd_ps(av, b1, c21);
        av = _mm256_broadcast_ss(a3 + t);
        c30 = _mm256_fmadd_ps(av, b0, c30); c31 = _mm256_fmadd_ps(av, b1, c31);
        av = _mm256_broadcast_ss(a4 + t);
        c40 = _mm256_fmadd_ps(av, b0, c40); c41 = _mm256_fmadd_ps(av, b1, c41);
        av = _mm256_broadcast_ss(a5 + t);
        c50 = _mm256_fmadd_ps(av, b0, c50); c51 = _mm256_fmadd_ps(av, b1, c51);
    }
    _mm256_storeu_ps(c + 0 * ldc, c00); _mm256_storeu_ps(c + 0 * ldc + 8, c01);
    _mm256_storeu_ps(c + 1 * ldc, c10); _mm256_storeu_ps(c + 1 * ldc + 8, c11);
    _mm256_storeu_ps(c + 2 * ldc, c20); _mm256_storeu_ps(c + 2 * ldc + 8, c21);
    _mm256_storeu_ps(c + 3 * ldc, c30); _mm256_storeu_ps(c + 3 * ldc + 8, c31);
    _mm256_storeu_ps(c + 4 * ldc, c40); _mm256_storeu_ps(c + 4 * ldc + 8, c41);
    _mm256_storeu_ps(c + 5 * ldc, c50); _mm256_storeu_ps(c + 5 * ldc + 8, c51);
}
#endif

struct AlignedFree {
    void operator()(float* p) const noexcept { std::free(p); }
};

// Packs op(B)[pc:pc+kc, jc:jc+nc] into consecutive kc x kNr panels, zero padded.
void pack_b(const float* b, std::size_t ldb, bool b_transposed, std::size_t pc, std::size_t kc,
            std::size_t jc, std::size_t nc, float* packed) {
    const std::size_t panels = (nc + kNr - 1) / kNr;
    for (std::size_t p = 0; p < panels; ++p) {
        float* dst = packed + p * kc * kNr;
        const std::size_t j0 = jc + p * kNr;
        const std::size_t width = std::min(kNr, jc + nc - j0);
        if (!b_transposed) {
            for (std::size_t t = 0; t < kc; ++t) {
                const float* src = b + (pc + t) * ldb + j0;
                std::size_t jj = 0;
                for (; jj < width; ++jj) dst[t * kNr + jj] = src[jj];
                for (; jj < kNr; ++jj) dst[t * kNr + jj] = 0.0f;
            }
        } else {
            for (std::size_t jj = 0; jj < kNr; ++jj) {
                if (jj < width) {
                    const float* src = b + (j0 + jj) * ldb + pc;
                    for (std::size_t t = 0; t < kc; ++t) dst[t * kNr + jj] = src[t];
                } else {
                    for (std::size_t t = 0; t < kc; ++t) dst[t * kNr + jj] = 0.0f;
                }
            }
        }
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
    }
}

} // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
          const float* b, std::size_t ldb, bool b_transposed, float* c, std::size_t ldc,
          bool accumulate) {
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (!accumulate) {
            for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0f);
        }
        return;
    }
    const std::size_t panel_floats = kKc * kNr;
    const std::size_t max_panels = (kNc + kNr - 1) / kNr;
    std::unique_ptr<float, AlignedFree> packed(
        static_cast<float*>(std::aligned_alloc(64, max_panels * panel_floats * sizeof(float))));

    for (std::size_t jc = 0; jc < n; jc += kNc) {
        const std::size_t nc = std::min(kNc, n - jc);
        const std::size_t panels = (nc + kNr - 1) / kNr;
        for (std::size_t pc = 0; pc < k; pc += kKc) {
            const std::size_t kc = std::min(kKc, k - pc);
            pack_b(b, ldb, b_transposed, pc, kc, jc, nc, packed.get());
            const bool load_c = accumulate || pc > 0;
            for (std::size_t ic = 0; ic < m; ic += kMr) {
                const std::size_t mr = std::min(kMr, m - ic);
                const float* a_blk = a + ic * lda + pc;
                for (std::size_t p = 0; p < panels; ++p) {
                    const std::size_t j0 = jc + p * kNr;
                    const std::size_t nr = std::min(kNr, n - j0);
                    float* c_blk = c + ic * ldc + j0;
                    const float* bp = packed.get() + p * kc * kNr;
#ifdef MFP_HAVE_AVX2_FMA
                    if (mr == kMr && nr == kNr) {
                        kernel_6x16(kc, a_blk, lda, bp, c_blk, ldc, load_c);
                        continue;
                    }
#endif
                    kernel_edge(kc, mr, nr, a_blk, lda, bp, c_blk, ldc, load_c);
                }
            }
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner dimensions disagree " + shape_to_string(a.shape()) +
                         " x " + shape_to_string(b.shape()));
    }
    Tensor c({m, n});
    gemm(m, n, k, a.raw(), k, b.raw(), n, false, c.raw(), n);
    require_finite(c, "matmul");
    return c;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank(weight, 2, "linear");
    const std::size_t out = weight.dim(0), in = weight.dim(1);
    if (x.shape().back() != in || bias.numel() != out) {
        throw ShapeError("linear: input " + shape_to_string(x.shape()) + " weight " +
                         shape_to_string(weight.shape()) + " bias " +
                         shape_to_string(bias.shape()));
    }
    const std::size_t rows = x.numel() / in;
    Shape shape = x.shape();
    shape.back() = out;
    Tensor y(shape);
    gemm(rows, out, in, x.raw(), in, weight.raw(), in, true, y.raw(), out);
    for (std::size_t r = 0; r < rows; ++r) {
        float* yr = y.raw() + r * out;
        for (std::size_t j = 0; j < out; ++j) yr[j] += bias[j];
    }
    require_finite(y, "linear");
    return y;
}

void layer_norm_rows(std::span<const float> x, std::size_t rows, std::size_t width,
                     std::span<const float> gamma, std::span<const float> beta, float eps,
                     std::span<float> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const float* xr = x.data() + r * width;
        float* yr = out.data() + r * width;
        double mean = 0.0;
        for (std::size_t j = 0; j < width; ++j) mean += xr[j];
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double d = xr[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(width);
        const double denom = std::sqrt(var + static_cast<double>(eps));
        const double inv = denom > 0.0 ? 1.0 / denom : 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double norm = (xr[j] - mean) * inv;
            yr[j] = static_cast<float>(norm * gamma[j] + beta[j]);
        }
    }
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    if (!(eps >= 0.0f)) {
        throw ShapeError("layer_norm: eps must be nonnegative");
    }
    const std::size_t width = x.shape().back();
    if (gamma.numel() != width || beta.numel() != width) {
        throw ShapeError("layer_norm: gamma/beta length must equal last axis " +
                         std::to_string(width));
    }
    Tensor y(x.shape());
    layer_norm_rows(x.data(), x.numel() / width, width, gamma.data(), beta.data(), eps, y.data());
    require_finite(y, "layer_norm");
    return y;
}

void softmax_inplace(std::span<float> row) {
    const float mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (float& v : row) {
        v = std::exp(v - mx);
        sum += v;
    }
    const double inv = 1.0 / sum;
    for (float& v : row) v = static_cast<float>(v * inv);
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw ShapeError("softmax: axis out of range");
    }
    require_finite(x, "softmax input");
    const auto& shape = x.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t len = shape[axis];

    Tensor y = x;
    std::vector<float> line(len);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            float* base = y.raw() + o * len * inner + in;
            for (std::size_t t = 0; t < len; ++t) line[t] = base[t * inner];
            softmax_inplace(line);
            for (std::size_t t = 0; t < len; ++t) base[t * inner] = line[t];
        }
    }
    return y;
}

void gelu_inplace(std::span<float> values) {
    constexpr float kInvSqrt2 = 0.70710678118654752440f;
    for (float& v : values) {
        v = 0.5f * v * (1.0f + std::erf(v * kInvSqrt2));
    }
}

Tensor gelu(const Tensor& x) {
    Tensor y = x;
    gelu_inplace(y.data());
    require_finite(y, "gelu");
    return y;
}

double mse(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.numel());
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mean_abs_diff");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        acc += std::abs(static_cast<double>(a[i]) - b[i]);
    }
    return acc / static_cast<double>(a.numel());
}

CosineResult cosine_similarity(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw ShapeError("cosine_similarity: length mismatch " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
    }
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += static_cast<double>(u[i]) * v[i];
        uu += static_cast<double>(u[i]) * u[i];
        vv += static_cast<double>(v[i]) * v[i];
    }
    if (uu == 0.0 || vv == 0.0) {
        return {0.0, true};
    }
    const double c = uv / (std::sqrt(uu) * std::sqrt(vv));
    return {std::clamp(c, -1.0, 1.0), false};
}

CosineResult cosine_similarity(const Tensor& u, const Tensor& v) {
    return cosine_similarity(u.data(), v.data());
}

double frobenius_norm(const Tensor& m) {
    double acc = 0.0;
    for (float v : m.data()) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
        return s;
    };
    double total = 0.0;
    for (double x : a) total += x * x;

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_norm() <= 1e-30 * std::max(total, 1e-300)) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = a[r * n + p];
                    const double arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = a[p * n + r];
                    const double aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                // Rows of v hold eigenvectors.
                for (std::size_t r = 0; r < n; ++r) {
                    const double vp = v[p * n + r];
                    const double vq = v[q * n + r];
                    v[p * n + r] = c * vp - s * vq;
                    v[q * n + r] = s * vp + c * vq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i * n + i] > a[j * n + j]; });
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a[order[i] * n + order[i]];
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(order[i] * n), n,
                    out.vectors.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return out;
}

PcaResult pca_top_k(const Tensor& rows, std::size_t k) {
    require_rank(rows, 2, "pca_top_k");
    const std::size_t n = rows.dim(0), d = rows.dim(1);
    if (k < 1 || k > n || k > d) {
        throw ShapeError("pca_top_k: need 1 <= k <= min(n, d), got k=" + std::to_string(k) +
                         " for " + shape_to_string(rows.shape()));
    }
    require_finite(rows, "pca_top_k input");

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += rows.at(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);

    std::vector<double> centered(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered[i * d + j] = rows.at(i, j) - mean[j];

    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ci = centered.data() + i * d;
        for (std::size_t p = 0; p < d; ++p) {
            const double cp = ci[p];
            if (cp == 0.0) continue;
            double* row = cov.data() + p * d;
            for (std::size_t q = p; q < d; ++q) row[q] += cp * ci[q];
        }
    }
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = p; q < d; ++q) {
            cov[p * d + q] /= static_cast<double>(n);
            cov[q * d + p] = cov[p * d + q];
        }
    }

    const SymmetricEigen eig = jacobi_eigen(std::move(cov), d);
    const double scale = std::max(eig.values.empty() ? 0.0 : eig.values[0], 0.0);
    const double null_threshold = std::max(scale * 1e-10, 1e-12);

    PcaResult out;
    out.components = Tensor({k, d});
    out.eigenvalues = Tensor({k});
    out.projected = Tensor({n, k});
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> vec(eig.vectors.begin() + static_cast<std::ptrdiff_t>(c * d),
                                eig.vectors.begin() + static_cast<std::ptrdiff_t>((c + 1) * d));
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(vec[j]) > std::abs(vec[arg])) arg = j;
        if (vec[arg] < 0.0)
            for (auto& x : vec) x = -x;
        for (std::size_t j = 0; j < d; ++j) out.components.at(c, j) = static_cast<float>(vec[j]);
        const double lambda = std::max(eig.values[c], 0.0);
        out.eigenvalues[c] = static_cast<float>(lambda);
        if (lambda <= null_threshold) ++out.null_components;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* ci = centered.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) acc += ci[j] * vec[j];
            out.projected.at(i, c) = static_cast<float>(acc);
        }
    }
    return out;
}

} // namespace mfp
