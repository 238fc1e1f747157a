#pragma once

#include "qpmkit/dispersion.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace qpmkit {

// Aperiodically poled grating: N periods of length period_m, period j split
// into an up domain of duty[j]*period_m and a down domain of the remainder.
// Any crystal length beyond N full periods is unpoled (sign -1).
//
// Construction establishes N = floor(crystal_length / period). Re-fitting the
// period afterwards (degeneracy restore) keeps N fixed and may stretch the
// poled region past the crystal length by up to one period; the validator
// allows exactly that much slack.
struct PolingProfile {
    double period_m = 0.0;
    double crystal_length_m = 0.0;
    double min_feature_m = 0.0;
    std::vector<double> duty;

    std::size_t periods() const { return duty.size(); }
    double poled_length_m() const { return period_m * static_cast<double>(duty.size()); }
    double duty_lo() const { return min_feature_m / period_m; }
    double duty_hi() const { return 1.0 - min_feature_m / period_m; }

    void validate() const; // throws config_error with the offending index
};

// Validated constructors.
PolingProfile make_profile(double period_m, double crystal_length_m,
                           double min_feature_m, std::vector<double> duty);
PolingProfile periodic_profile(double period_m, double crystal_length_m,
                               double min_feature_m);
// 50%-peak Gaussian duty envelope: duty[j] = asin(env(z_j))/pi with
// env(z) = exp(-(z - center)^2 / (2 w^2)) sampled at period midpoints.
PolingProfile gaussian_init(double period_m, double crystal_length_m,
                            double min_feature_m, double envelope_width_m);
// Same duty pattern and period count under a new period length.
PolingProfile with_period(const PolingProfile& p, double new_period_m);

// Sign of the nonlinear coefficient at depth z (meters), +1 or -1.
int g_profile(const PolingProfile& p, double z_m);

// Normalized phase-matching amplitude of the grating,
//   G(dk) = (1/L) * integral_0^L g(z) exp(-i dk z) dz,  L = N * period.
// Evaluated in closed form per period; |dk| < 1e-6 rad/m uses the dk -> 0
// limit (mean of g). |G| <= 1.
std::complex<double> phase_matching(const PolingProfile& p, double dk_rad_m);

// Elementwise phase_matching over an array of mismatch values; the profile
// geometry is prepared once, so this is the fast path for grids.
void phase_matching_batch(const PolingProfile& p, const double* dk_rad_m,
                          std::size_t count, std::complex<double>* out);

// Anti-diagonal slice through the phase-matching function: for each signal
// sample, the idler is omega_pump - omega_s. Returns |G| normalized to a
// peak value of 1. Throws numeric_error if the slice is identically zero.
std::vector<double> h_slice(const std::vector<double>& omega_s_samples,
                            const PolingProfile& p, double omega_pump,
                            const InteractionConfig& cfg, const DispersionModel& model);

struct SliceGradient {
    std::vector<double> H;   // normalized slice, size = samples
    std::vector<double> dH;  // row-major [samples x periods] of dH_l / dduty_j
    std::size_t samples = 0;
    std::size_t periods = 0;
};

// Slice plus its exact gradient with respect to every duty cycle, including
// the chain through the peak normalization (the peak row is exactly zero).
SliceGradient h_slice_with_gradient(const std::vector<double>& omega_s_samples,
                                    const PolingProfile& p, double omega_pump,
                                    const InteractionConfig& cfg,
                                    const DispersionModel& model);

// CSV export: header row then one row per period,
//   index,z_start_m,duty_cycle,domain_up_length_m,domain_down_length_m
// plus a JSON sidecar at <csv_path>.meta.json carrying the period, crystal
// length, feature floor, period count and the dispersion file hash.
void export_poling_csv(const PolingProfile& p, const std::string& csv_path,
                       const std::string& dispersion_file_hash);

struct ImportedProfile {
    PolingProfile profile;
    std::string dispersion_file_hash;
};

// Inverse of export_poling_csv; re-validates every row and names the first
// bad row in the error message.
ImportedProfile import_poling_csv(const std::string& csv_path);

} // namespace qpmkit
