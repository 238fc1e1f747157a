#include <doctest.h>

#include "qpmkit/errors.hpp"
#include "qpmkit/kernels.hpp"

#include "test_support.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace qpmkit;

namespace {

struct KernelGuard {
    ~KernelGuard() { kernels::select_kernel("auto"); }
};

std::vector<std::string> available_kernels() {
    KernelGuard guard;
    std::vector<std::string> names{"scalar"};
    try {
        kernels::select_kernel("avx2");
        names.push_back("avx2");
    } catch (const config_error&) {
    }
    return names;
}

} // namespace

TEST_CASE("kernel selection knows its implementations") {
    KernelGuard guard;
    CHECK_THROWS_AS(kernels::select_kernel("bogus"), config_error);
    kernels::select_kernel("scalar");
    CHECK(std::string(kernels::active_kernel()) == "scalar");
    kernels::select_kernel("auto");
    const std::string active = kernels::active_kernel();
    CHECK((active == "scalar" || active == "avx2"));
}

TEST_CASE("every kernel matches libm to 2e-14 up to phase 1e5") {
    KernelGuard guard;
    for (const auto& name : available_kernels()) {
        kernels::select_kernel(name);
        INFO("kernel " << name);

        std::vector<double> edge{0.0,   0.5 * pi,  -0.5 * pi, pi,       -pi,
                                 1.5 * pi, -1.5 * pi, two_pi,   -two_pi,  1.0,
                                 -1.0,  12345.6789, -12345.6789, 99999.5, -99999.5};
        std::vector<double> c(edge.size()), s(edge.size());
        kernels::sincos_scaled(1.0, edge.data(), edge.size(), c.data(), s.data());
        for (std::size_t i = 0; i < edge.size(); ++i) {
            CHECK(std::abs(c[i] - std::cos(edge[i])) < 2e-14);
            CHECK(std::abs(s[i] - std::sin(edge[i])) < 2e-14);
        }

        auto gen = testkit::rng(0x51c05);
        std::uniform_real_distribution<double> u(0.0, 250.0);
        std::vector<double> q(4096);
        for (double& v : q) v = u(gen);
        for (const double scale : {399.9, -399.9, 0.37, -1.0}) {
            std::vector<double> qc(q.size()), qs(q.size());
            kernels::sincos_scaled(scale, q.data(), q.size(), qc.data(), qs.data());
            double worst = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                worst = std::max(worst, std::abs(qc[i] - std::cos(scale * q[i])));
                worst = std::max(worst, std::abs(qs[i] - std::sin(scale * q[i])));
            }
            CHECK(worst < 2e-14);
        }
    }
}

TEST_CASE("implementations agree elementwise including ragged tails") {
    const auto names = available_kernels();
    if (names.size() < 2) return; // only the scalar path exists on this host
    KernelGuard guard;
    auto gen = testkit::rng(77);
    std::uniform_real_distribution<double> u(-300.0, 300.0);
    for (std::size_t n = 0; n <= 67; ++n) {
        std::vector<double> q(n);
        for (double& v : q) v = u(gen);
        const double scale = 333.0;

        std::vector<double> cs(n), ss(n), cv(n), sv(n);
        kernels::select_kernel("scalar");
        kernels::sincos_scaled(scale, q.data(), n, cs.data(), ss.data());
        const auto sum_s = kernels::sum_exp_scaled(scale, q.data(), n);
        kernels::select_kernel("avx2");
        kernels::sincos_scaled(scale, q.data(), n, cv.data(), sv.data());
        const auto sum_v = kernels::sum_exp_scaled(scale, q.data(), n);

        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(cs[i] - cv[i]) < 4e-14);
            CHECK(std::abs(ss[i] - sv[i]) < 4e-14);
        }
        const double sum_tol = 4e-14 * static_cast<double>(n ? n : 1);
        CHECK(std::abs(sum_s.cos_sum - sum_v.cos_sum) < sum_tol);
        CHECK(std::abs(sum_s.sin_sum - sum_v.sin_sum) < sum_tol);
    }
}

TEST_CASE("sum kernel equals the summed elementwise kernel") {
    KernelGuard guard;
    for (const auto& name : available_kernels()) {
        kernels::select_kernel(name);
        INFO("kernel " << name);

        auto gen = testkit::rng(991);
        std::uniform_real_distribution<double> u(0.0, 250.0);
        std::vector<double> q(257);
        for (double& v : q) v = u(gen);
        const double scale = -123.456;

        std::vector<double> c(q.size()), s(q.size());
        kernels::sincos_scaled(scale, q.data(), q.size(), c.data(), s.data());
        double cs = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            cs += c[i];
            ss += s[i];
        }
        const auto sums = kernels::sum_exp_scaled(scale, q.data(), q.size());
        CHECK(std::abs(sums.cos_sum - cs) < 5e-11);
        CHECK(std::abs(sums.sin_sum - ss) < 5e-11);

        const auto empty = kernels::sum_exp_scaled(scale, q.data(), 0);
        CHECK(empty.cos_sum == 0.0);
        CHECK(empty.sin_sum == 0.0);
        kernels::sincos_scaled(scale, q.data(), 0, c.data(), s.data());
    }
}
