#pragma once

#include "qpmkit/dispersion.hpp"
#include "qpmkit/poling.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qpmkit {

// Rectangular frequency grid; both axes ascend in angular frequency.
struct FrequencyGrid {
    std::vector<double> omega_s;
    std::vector<double> omega_i;
};

// Uniform grid with the given centers and full spans (rad/s).
FrequencyGrid make_grid(double center_s, double span_s, std::size_t count_s,
                        double center_i, double span_i, std::size_t count_i);

struct PumpSpectrum {
    enum class Kind { gaussian, tabulated };
    Kind kind = Kind::gaussian;
    // gaussian: amplitude exp(-(w - omega_center)^2 / sigma^2)
    double omega_center = 0.0;
    double sigma = 0.0;
    // tabulated: linear interpolation, zero outside the table
    std::vector<double> tab_omega;
    std::vector<double> tab_amplitude;

    double amplitude(double omega_p) const;

    static PumpSpectrum gaussian_pump(double omega_center, double sigma);
    static PumpSpectrum from_csv(const std::string& path);
};

struct Jsa {
    FrequencyGrid grid;
    Eigen::MatrixXcd f; // rows follow omega_s, columns follow omega_i
};

// Wavevector mismatch on every grid point.
Eigen::MatrixXd delta_k_grid(const FrequencyGrid& grid, const InteractionConfig& cfg,
                             const DispersionModel& model);

// Phase-matching amplitude of the profile on every grid point.
Eigen::MatrixXcd phase_matching_grid(const PolingProfile& p,
                                     const FrequencyGrid& grid,
                                     const InteractionConfig& cfg,
                                     const DispersionModel& model);

// f(w_s, w_i) = pump(w_s + w_i) * G(dk(w_s, w_i)).
Jsa compute_jsa(const PolingProfile& p, const PumpSpectrum& pump,
                const FrequencyGrid& grid, const InteractionConfig& cfg,
                const DispersionModel& model);
// Same, reusing a precomputed phase-matching grid (pump scans).
Jsa compute_jsa(const Eigen::MatrixXcd& G, const PumpSpectrum& pump,
                const FrequencyGrid& grid);

struct SpectralFilter {
    enum class Shape { rectangular, gaussian };
    Shape shape = Shape::rectangular;
    double bandwidth_nm = 8.0;

    // Amplitude transmission at omega for a filter centered on center_nm.
    // Rectangular: 1 inside the closed wavelength passband, 0 outside.
    // Gaussian: intensity FWHM equal to the stated bandwidth.
    double amplitude(double omega, double center_nm) const;
};

SpectralFilter parse_filter(const std::string& shape, double bandwidth_nm);
std::string filter_shape_name(SpectralFilter::Shape s);

// Apply the same filter to both arms, centered per arm. Throws numeric_error
// if the filtered amplitude is identically zero.
Jsa apply_filter(const Jsa& jsa, const SpectralFilter& filter, double center_s_nm,
                 double center_i_nm);

// Schmidt-mode weights lambda_n (descending, sum 1) of the amplitude matrix.
std::vector<double> schmidt_weights(const Eigen::MatrixXcd& f);

// Spectral purity sum lambda_n^2. Scale invariant; in (0, 1].
double purity(const Eigen::MatrixXcd& f);

// First `count` Schmidt coefficients xi_n = sqrt(lambda_n).
std::vector<double> schmidt_coefficients(const Eigen::MatrixXcd& f, std::size_t count);

struct MarginalPeaks {
    double omega_s;
    double omega_i;
};

// Intensity-marginal peak positions with three-point parabolic refinement.
// Throws numeric_error when a marginal peaks on the grid boundary.
MarginalPeaks marginal_peaks(const Jsa& jsa);

struct MarginalSigmas {
    double sigma_s; // rad/s
    double sigma_i;
};

// Gaussian fit of each intensity marginal (weighted log-parabola over
// samples above 1e-3 of the peak); falls back to the second moment when the
// fit is not concave.
MarginalSigmas fit_marginal_sigmas(const Jsa& jsa);

// Intensity table |f|^2 as CSV with wavelength axes in nm (ascending): first
// row holds the idler axis, first column the signal axis. log_scale writes
// log10(|f|^2 / max) clipped at -12 instead.
void write_intensity_csv(const Jsa& jsa, const std::string& path, bool log_scale);

} // namespace qpmkit
