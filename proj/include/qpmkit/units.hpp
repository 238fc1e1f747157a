#pragma once

#include <cmath>

// Unit conventions used throughout the library:
//   vacuum wavelengths  nm
//   angular frequency   rad/s
//   wavevectors         rad/m
//   lengths inside the crystal (period, domain, crystal)  m
// Conversions between nm and rad/s go through these helpers only.

namespace qpmkit {

inline constexpr double c_light = 299792458.0; // m/s
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

inline double omega_from_nm(double wavelength_nm) {
    return two_pi * c_light / (wavelength_nm * 1e-9);
}

inline double nm_from_omega(double omega_rad_s) {
    return two_pi * c_light / omega_rad_s * 1e9;
}

// Width of a wavelength interval of `bw_nm` around `center_nm`, linearized
// to angular frequency: dw = 2*pi*c*bw/lambda^2.
inline double bandwidth_nm_to_omega(double bw_nm, double center_nm) {
    return two_pi * c_light * (bw_nm * 1e-9) / ((center_nm * 1e-9) * (center_nm * 1e-9));
}

inline double bandwidth_omega_to_nm(double bw_omega, double center_nm) {
    return bw_omega * (center_nm * 1e-9) * (center_nm * 1e-9) / (two_pi * c_light) * 1e9;
}

} // namespace qpmkit
