#pragma once

#include <cstddef>
#include <string>
#include <utility>

// Hot loops of the library: evaluating cos/sin of phases scale * q[j] for a
// fixed offset array q. Two implementations ship, a scalar reference built on
// libm and an AVX2+FMA one with Cody-Waite range reduction. The dispatcher
// picks AVX2 when the CPU supports it; QPMKIT_KERNEL=scalar|avx2 overrides.
//
// Accuracy contract: absolute error < 2e-14 per cos/sin for |scale * q[j]|
// up to 1e5, which covers every phase the library produces (|phase| <~ 5e3).

namespace qpmkit::kernels {

struct SumCS {
    double cos_sum;
    double sin_sum;
};

// out_c[j] = cos(scale * q[j]), out_s[j] = sin(scale * q[j])
using SincosFn = void (*)(double scale, const double* q, std::size_t n,
                          double* out_c, double* out_s);
// returns (sum_j cos(scale * q[j]), sum_j sin(scale * q[j]))
using SumFn = SumCS (*)(double scale, const double* q, std::size_t n);

void sincos_scaled(double scale, const double* q, std::size_t n,
                   double* out_c, double* out_s);
SumCS sum_exp_scaled(double scale, const double* q, std::size_t n);

// Name of the implementation in use: "scalar" or "avx2".
const char* active_kernel();

// Force an implementation (tests). Throws config_error if unknown or
// unavailable on this CPU. Pass "auto" to restore default selection.
void select_kernel(const std::string& name);

namespace detail {
void sincos_scaled_scalar(double scale, const double* q, std::size_t n,
                          double* out_c, double* out_s);
SumCS sum_exp_scaled_scalar(double scale, const double* q, std::size_t n);
#if defined(QPMKIT_HAVE_AVX2)
void sincos_scaled_avx2(double scale, const double* q, std::size_t n,
                        double* out_c, double* out_s);
SumCS sum_exp_scaled_avx2(double scale, const double* q, std::size_t n);
#endif
} // namespace detail

} // namespace qpmkit::kernels
