#include "qpmkit/kernels.hpp"

#if defined(QPMKIT_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace qpmkit::kernels::detail {

namespace {

// Quadrant reduction x = n*(pi/2) + r with |r| <= pi/4, three-part
// Cody-Waite constants (fdlibm split of pi/2). FMA keeps each subtraction
// to a single rounding, so the reduced argument is good to a few ulp for
// |x| well past the 1e5 the library contract promises.
constexpr double TWO_OVER_PI = 6.36619772367581382433e-01;
constexpr double PIO2_1 = 1.57079632673412561417e+00;
constexpr double PIO2_2 = 6.07710050650619224932e-11;
constexpr double PIO2_3 = 2.02226624879595063154e-21;

// Minimax polynomials on [-pi/4, pi/4]:
//   sin(r) = r + r^3 * S(r^2)
//   cos(r) = 1 - r^2/2 + r^4 * C(r^2)
constexpr double S0 = 1.58962301576546568060e-10;
constexpr double S1 = -2.50507477628578072866e-8;
constexpr double S2 = 2.75573136213857245213e-6;
constexpr double S3 = -1.98412698295895385996e-4;
constexpr double S4 = 8.33333333332211858878e-3;
constexpr double S5 = -1.66666666666666307295e-1;

constexpr double C0 = -1.13585365213876817300e-11;
constexpr double C1 = 2.08757008419747316778e-9;
constexpr double C2 = -2.75573141792967388112e-7;
constexpr double C3 = 2.48015872888517179954e-5;
constexpr double C4 = -1.38888888888730564116e-3;
constexpr double C5 = 4.16666666666665929218e-2;

inline void sincos4(__m256d x, __m256d& s_out, __m256d& c_out) {
    const __m256d nd = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(TWO_OVER_PI)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(PIO2_1), x);
    r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(PIO2_2), r);
    r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(PIO2_3), r);

    const __m256d z = _mm256_mul_pd(r, r);

    __m256d sp = _mm256_set1_pd(S0);
    sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(S1));
    sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(S2));
    sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(S3));
    sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(S4));
    sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(S5));
    const __m256d s_base = _mm256_fmadd_pd(_mm256_mul_pd(r, z), sp, r);

    __m256d cp = _mm256_set1_pd(C0);
    cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(C1));
    cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(C2));
    cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(C3));
    cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(C4));
    cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(C5));
    const __m256d c_half = _mm256_fnmadd_pd(z, _mm256_set1_pd(0.5), _mm256_set1_pd(1.0));
    const __m256d c_base = _mm256_fmadd_pd(_mm256_mul_pd(z, z), cp, c_half);

    // Quadrant selection from the low two bits of n (two's complement mod 4):
    //   sin: q=0 -> s, 1 -> c, 2 -> -s, 3 -> -c
    //   cos: q=0 -> c, 1 -> -s, 2 -> -c, 3 -> s
    const __m128i n32 = _mm256_cvtpd_epi32(nd);
    const __m128i one32 = _mm_set1_epi32(1);
    const __m128i two32 = _mm_set1_epi32(2);
    const __m128i swap32 = _mm_cmpeq_epi32(_mm_and_si128(n32, one32), one32);
    const __m128i sneg32 = _mm_cmpeq_epi32(_mm_and_si128(n32, two32), two32);
    const __m128i cneg32 =
        _mm_cmpeq_epi32(_mm_and_si128(_mm_add_epi32(n32, one32), two32), two32);

    const __m256d swap = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(swap32));
    const __m256d sneg = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(sneg32));
    const __m256d cneg = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(cneg32));

    const __m256d signbit = _mm256_set1_pd(-0.0);
    __m256d s = _mm256_blendv_pd(s_base, c_base, swap);
    __m256d c = _mm256_blendv_pd(c_base, s_base, swap);
    s = _mm256_xor_pd(s, _mm256_and_pd(sneg, signbit));
    c = _mm256_xor_pd(c, _mm256_and_pd(cneg, signbit));
    s_out = s;
    c_out = c;
}

inline double hsum(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

} // namespace

void sincos_scaled_avx2(double scale, const double* q, std::size_t n,
                        double* out_c, double* out_s) {
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d x = _mm256_mul_pd(vs, _mm256_loadu_pd(q + j));
        __m256d s, c;
        sincos4(x, s, c);
        _mm256_storeu_pd(out_s + j, s);
        _mm256_storeu_pd(out_c + j, c);
    }
    for (; j < n; ++j) {
        const double x = scale * q[j];
        out_c[j] = std::cos(x);
        out_s[j] = std::sin(x);
    }
}

SumCS sum_exp_scaled_avx2(double scale, const double* q, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    __m256d acc_c = _mm256_setzero_pd();
    __m256d acc_s = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d x = _mm256_mul_pd(vs, _mm256_loadu_pd(q + j));
        __m256d s, c;
        sincos4(x, s, c);
        acc_c = _mm256_add_pd(acc_c, c);
        acc_s = _mm256_add_pd(acc_s, s);
    }
    double cs = hsum(acc_c), ss = hsum(acc_s);
    for (; j < n; ++j) {
        const double x = scale * q[j];
        cs += std::cos(x);
        ss += std::sin(x);
    }
    return {cs, ss};
}

} // namespace qpmkit::kernels::detail

#endif // QPMKIT_HAVE_AVX2
