// Runtime backend selection for the compute kernels.

#include "shdiff/kernels.hpp"

#include <stdexcept>

namespace shdiff::kernels {

bool avx2_supported() {
#if defined(SHDIFF_HAVE_AVX2_BUILD) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

Backend detect() { return avx2_supported() ? Backend::avx2 : Backend::scalar; }

Backend& current() {
    static Backend b = detect();
    return b;
}

}  // namespace

Backend active_backend() { return current(); }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw std::runtime_error("kernels: avx2 backend not supported on this CPU");
    current() = b;
}

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

#if defined(SHDIFF_HAVE_AVX2_BUILD)
#define SHDIFF_DISPATCH(fn, ...) \
    return current() == Backend::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define SHDIFF_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) { SHDIFF_DISPATCH(dot, a, b, n); }
double sum(const double* x, std::size_t n) { SHDIFF_DISPATCH(sum, x, n); }
double sumsq(const double* x, std::size_t n) { SHDIFF_DISPATCH(sumsq, x, n); }
double sq_gap(const double* a, const double* b, std::size_t n) { SHDIFF_DISPATCH(sq_gap, a, b, n); }
double abs_gap(const double* a, const double* b, std::size_t n) { SHDIFF_DISPATCH(abs_gap, a, b, n); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { SHDIFF_DISPATCH(axpy, n, alpha, x, y); }
void scale(std::size_t n, double alpha, double* x) { SHDIFF_DISPATCH(scale, n, alpha, x); }
void hadamard(const double* a, const double* b, double* out, std::size_t n) { SHDIFF_DISPATCH(hadamard, a, b, out, n); }
void matmul_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) { SHDIFF_DISPATCH(matmul_nn, m, n, k, a, b, c); }
void matmul_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) { SHDIFF_DISPATCH(matmul_nt, m, n, k, a, b, c); }
void matmul_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) { SHDIFF_DISPATCH(matmul_tn, m, n, k, a, b, c); }

#undef SHDIFF_DISPATCH

}  // namespace shdiff::kernels
