#include "qpmkit/kernels.hpp"

#include <cmath>

namespace qpmkit::kernels::detail {

void sincos_scaled_scalar(double scale, const double* q, std::size_t n,
                          double* out_c, double* out_s) {
    for (std::size_t j = 0; j < n; ++j) {
        const double x = scale * q[j];
        out_c[j] = std::cos(x);
        out_s[j] = std::sin(x);
    }
}

SumCS sum_exp_scaled_scalar(double scale, const double* q, std::size_t n) {
    double cs = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = scale * q[j];
        cs += std::cos(x);
        ss += std::sin(x);
    }
    return {cs, ss};
}

} // namespace qpmkit::kernels::detail
