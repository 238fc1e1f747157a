#include "qpmkit/kernels.hpp"
#include "qpmkit/errors.hpp"

#include <cstdlib>

namespace qpmkit::kernels {

namespace {

struct Impl {
    SincosFn sincos;
    SumFn sum;
    const char* name;
};

Impl scalar_impl() {
    return {detail::sincos_scaled_scalar, detail::sum_exp_scaled_scalar, "scalar"};
}

bool avx2_available() {
#if defined(QPMKIT_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Impl avx2_impl() {
#if defined(QPMKIT_HAVE_AVX2)
    return {detail::sincos_scaled_avx2, detail::sum_exp_scaled_avx2, "avx2"};
#else
    throw config_error("avx2 kernels were not compiled into this build");
#endif
}

Impl resolve(const std::string& name) {
    if (name == "scalar") return scalar_impl();
    if (name == "avx2") {
        if (!avx2_available())
            throw config_error("avx2 kernels unavailable on this CPU or build");
        return avx2_impl();
    }
    if (name == "auto") {
        if (const char* env = std::getenv("QPMKIT_KERNEL")) {
            const std::string v = env;
            if (!v.empty() && v != "auto") return resolve(v);
        }
        return avx2_available() ? avx2_impl() : scalar_impl();
    }
    throw config_error("unknown kernel '" + name + "' (expected auto, scalar or avx2)");
}

Impl& current() {
    static Impl impl = resolve("auto");
    return impl;
}

} // namespace

void sincos_scaled(double scale, const double* q, std::size_t n,
                   double* out_c, double* out_s) {
    current().sincos(scale, q, n, out_c, out_s);
}

SumCS sum_exp_scaled(double scale, const double* q, std::size_t n) {
    return current().sum(scale, q, n);
}

const char* active_kernel() { return current().name; }

void select_kernel(const std::string& name) { current() = resolve(name); }

} // namespace qpmkit::kernels
