#pragma once

#include <cstddef>
#include <string>

namespace shdiff::kernels {

/// Which implementation backs the dispatched entry points below.
enum class Backend { scalar, avx2 };

/// True when the running CPU can execute the AVX2+FMA kernels.
bool avx2_supported();

/// Backend currently in use (auto-detected on first use).
Backend active_backend();

/// Force a backend, e.g. for equivalence tests. Throws std::runtime_error if
/// the requested backend cannot run on this machine.
void set_backend(Backend b);

std::string backend_name(Backend b);

// ---------------------------------------------------------------------------
// Dispatched kernels. All matrices are dense row-major doubles.
//
//   matmul_nn: C[m x n] = A[m x k] * B[k x n]
//   matmul_nt: C[m x n] = A[m x k] * B[n x k]^T
//   matmul_tn: C[m x n] = A[k x m]^T * B[k x n]
//
// C is overwritten. matmul_nn / matmul_tn keep the scalar accumulation order
// per element (SIMD across independent outputs), so scalar and AVX2 results
// are bit-identical; the reductions (dot/sum/.../matmul_nt) use multi-lane
// accumulators and agree with the scalar path only up to rounding.
// ---------------------------------------------------------------------------

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
/// sum_i (a_i - b_i)^2
double sq_gap(const double* a, const double* b, std::size_t n);
/// sum_i |a_i - b_i|
double abs_gap(const double* a, const double* b, std::size_t n);
/// y += alpha * x
void axpy(std::size_t n, double alpha, const double* x, double* y);
/// x *= alpha
void scale(std::size_t n, double alpha, double* x);
/// out_i = a_i * b_i
void hadamard(const double* a, const double* b, double* out, std::size_t n);

void matmul_nn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_nt(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_tn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);

// Scalar reference implementations (always available; the ground truth the
// SIMD variants are tested against).
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double sq_gap(const double* a, const double* b, std::size_t n);
double abs_gap(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void scale(std::size_t n, double alpha, double* x);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void matmul_nn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_nt(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_tn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
}  // namespace scalar

#if defined(SHDIFF_HAVE_AVX2_BUILD)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double sq_gap(const double* a, const double* b, std::size_t n);
double abs_gap(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void scale(std::size_t n, double alpha, double* x);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void matmul_nn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_nt(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
void matmul_tn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c);
}  // namespace avx2
#endif

}  // namespace shdiff::kernels
