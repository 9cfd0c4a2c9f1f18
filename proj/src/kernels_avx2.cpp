// AVX2+FMA variants of the hot kernels. This translation unit is the only one
// compiled with -mavx2 -mfma; it must not be entered unless avx2_supported().

#include "shdiff/kernels.hpp"

#if defined(SHDIFF_HAVE_AVX2_BUILD)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace shdiff::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum(_mm256_add_pd(acc0, acc1)) + tail;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

double sumsq(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * x[i];
    return hsum(acc) + tail;
}

double sq_gap(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d * d;
    }
    return hsum(acc) + tail;
}

double abs_gap(const double* a, const double* b, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(signmask, d));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += std::fabs(a[i] - b[i]);
    return hsum(acc) + tail;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(std::size_t n, double alpha, double* x) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void matmul_nn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c) {
    // 4-row by 8-column register block; each C element still accumulates over
    // p in increasing order.
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
            __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
            __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
            __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
                const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
                __m256d av = _mm256_set1_pd(a[(i + 0) * k + p]);
                c00 = _mm256_fmadd_pd(av, b0, c00);
                c01 = _mm256_fmadd_pd(av, b1, c01);
                av = _mm256_set1_pd(a[(i + 1) * k + p]);
                c10 = _mm256_fmadd_pd(av, b0, c10);
                c11 = _mm256_fmadd_pd(av, b1, c11);
                av = _mm256_set1_pd(a[(i + 2) * k + p]);
                c20 = _mm256_fmadd_pd(av, b0, c20);
                c21 = _mm256_fmadd_pd(av, b1, c21);
                av = _mm256_set1_pd(a[(i + 3) * k + p]);
                c30 = _mm256_fmadd_pd(av, b0, c30);
                c31 = _mm256_fmadd_pd(av, b1, c31);
            }
            _mm256_storeu_pd(c + (i + 0) * n + j, c00);
            _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
            _mm256_storeu_pd(c + (i + 1) * n + j, c10);
            _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
            _mm256_storeu_pd(c + (i + 2) * n + j, c20);
            _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
            _mm256_storeu_pd(c + (i + 3) * n + j, c30);
            _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
        }
        for (; j < n; ++j) {
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double bpj = b[p * n + j];
                a0 += a[(i + 0) * k + p] * bpj;
                a1 += a[(i + 1) * k + p] * bpj;
                a2 += a[(i + 2) * k + p] * bpj;
                a3 += a[(i + 3) * k + p] * bpj;
            }
            c[(i + 0) * n + j] = a0;
            c[(i + 1) * n + j] = a1;
            c[(i + 2) * n + j] = a2;
            c[(i + 3) * n + j] = a3;
        }
    }
    for (; i < m; ++i) {
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p)
                acc = _mm256_fmadd_pd(_mm256_set1_pd(a[i * k + p]),
                                      _mm256_loadu_pd(b + p * n + j), acc);
            _mm256_storeu_pd(c + i * n + j, acc);
        }
        for (; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
}

void matmul_nt(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c) {
    // 2-row by 4-row block of dot products; p runs in vector lanes, so the
    // reduction order differs from scalar (tolerance-equivalent, not bitwise).
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2) {
        const double* a0 = a + (i + 0) * k;
        const double* a1 = a + (i + 1) * k;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const double* b0 = b + (j + 0) * k;
            const double* b1 = b + (j + 1) * k;
            const double* b2 = b + (j + 2) * k;
            const double* b3 = b + (j + 3) * k;
            __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd();
            __m256d s02 = _mm256_setzero_pd(), s03 = _mm256_setzero_pd();
            __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd();
            __m256d s12 = _mm256_setzero_pd(), s13 = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                const __m256d va0 = _mm256_loadu_pd(a0 + p);
                const __m256d va1 = _mm256_loadu_pd(a1 + p);
                const __m256d vb0 = _mm256_loadu_pd(b0 + p);
                const __m256d vb1 = _mm256_loadu_pd(b1 + p);
                const __m256d vb2 = _mm256_loadu_pd(b2 + p);
                const __m256d vb3 = _mm256_loadu_pd(b3 + p);
                s00 = _mm256_fmadd_pd(va0, vb0, s00);
                s01 = _mm256_fmadd_pd(va0, vb1, s01);
                s02 = _mm256_fmadd_pd(va0, vb2, s02);
                s03 = _mm256_fmadd_pd(va0, vb3, s03);
                s10 = _mm256_fmadd_pd(va1, vb0, s10);
                s11 = _mm256_fmadd_pd(va1, vb1, s11);
                s12 = _mm256_fmadd_pd(va1, vb2, s12);
                s13 = _mm256_fmadd_pd(va1, vb3, s13);
            }
            double t00 = hsum(s00), t01 = hsum(s01), t02 = hsum(s02), t03 = hsum(s03);
            double t10 = hsum(s10), t11 = hsum(s11), t12 = hsum(s12), t13 = hsum(s13);
            for (; p < k; ++p) {
                const double x0 = a0[p], x1 = a1[p];
                t00 += x0 * b0[p];
                t01 += x0 * b1[p];
                t02 += x0 * b2[p];
                t03 += x0 * b3[p];
                t10 += x1 * b0[p];
                t11 += x1 * b1[p];
                t12 += x1 * b2[p];
                t13 += x1 * b3[p];
            }
            double* c0 = c + (i + 0) * n + j;
            double* c1 = c + (i + 1) * n + j;
            c0[0] = t00; c0[1] = t01; c0[2] = t02; c0[3] = t03;
            c1[0] = t10; c1[1] = t11; c1[2] = t12; c1[3] = t13;
        }
        for (; j < n; ++j) {
            c[(i + 0) * n + j] = dot(a0, b + j * k, k);
            c[(i + 1) * n + j] = dot(a1, b + j * k, k);
        }
    }
    for (; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void matmul_tn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c) {
    // Rank-1 updates in increasing p order, vectorized over columns.
    std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d av = _mm256_set1_pd(arow[i]);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4)
                _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j),
                                                           _mm256_loadu_pd(crow + j)));
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

}  // namespace shdiff::kernels::avx2

#endif  // SHDIFF_HAVE_AVX2_BUILD
