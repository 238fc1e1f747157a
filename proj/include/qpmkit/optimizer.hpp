#pragma once

#include "qpmkit/dispersion.hpp"
#include "qpmkit/jsa.hpp"
#include "qpmkit/poling.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace qpmkit {

// Gaussian template the phase-matching slice is pulled toward:
//   T(w) = exp(-(w - omega_center)^2 / (2 sigma^2))
struct GaussianTarget {
    double omega_center = 0.0;
    double sigma = 0.0;
};

double target_value(const GaussianTarget& t, double omega);
std::vector<double> target_curve(const GaussianTarget& t,
                                 const std::vector<double>& omega);

// Sum of squared residuals between a slice and the target curve.
double quadratic_cost(const std::vector<double>& h, const std::vector<double>& t);

// Adam with bias correction. Moment buffers grow on first use and must keep
// their parameter count afterwards.
struct AdamState {
    double rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long steps = 0;
    std::vector<double> m;
    std::vector<double> v;
};

void adam_step(AdamState& st, double* params, const double* grad, std::size_t n);

// One Adam step on the target parameters. Internally the parameters are
// scaled by sigma_ref (the initial target width) so the configured rate acts
// on O(1) quantities; sigma is clamped to at least 1e-3 * sigma_ref.
void optimize_pump_target(GaussianTarget& t, const std::vector<double>& h,
                          const std::vector<double>& omega_samples, AdamState& state,
                          double sigma_ref);

// One Adam step on every duty cycle, using the slice gradient; results are
// clamped into the profile's admissible duty range.
void optimize_poling(PolingProfile& p, const SliceGradient& slice,
                     const std::vector<double>& target, AdamState& state);

struct LearnRunConfig {
    double rate_target = 0.005;
    double rate_poling = 0.015;
    int max_iterations = 300;
    double convergence_rel = 1e-6; // relative cost change over the window
    int convergence_window = 10;
    std::size_t samples = 1024;
    double slice_half_span = 0.0; // rad/s; 0 derives 3x the initial sigma
};

struct LearnResult {
    std::vector<double> cost_history; // cost at each visited state, final included
    int iterations = 0;
    bool converged = false;
};

// Joint gradient descent on the duty cycles and the target parameters
// against the anti-diagonal slice at the configured pump. Both parameter
// groups step from the same slice evaluation each iteration. Throws
// numeric_error after 50 consecutive cost increases.
LearnResult run_learning_loop(PolingProfile& p, GaussianTarget& t,
                              const LearnRunConfig& lc, const InteractionConfig& cfg,
                              const DispersionModel& model);

struct PeriodAdjustResult {
    PolingProfile profile;
    double separation_nm = 0.0;
    int evaluations = 0;
    std::string warning; // empty on a clean bracketed solve
};

// Retunes the period (duty pattern and period count fixed) until the filtered
// marginal peaks coincide: bisection on the signed peak separation over
// period * (1 +/- rel_bracket), stopping below tol_nm or at max_evals JSA
// evaluations. The upper bracket edge is capped at the longest period the
// profile validator accepts for the fixed period count, so the search never
// stretches the poled region more than one period past the crystal end.
// Returns the best sample with a warning when the bracket never straddles
// zero.
PeriodAdjustResult adjust_period(const PolingProfile& p, const PumpSpectrum& pump,
                                 const SpectralFilter& filter, const FrequencyGrid& grid,
                                 const InteractionConfig& cfg, const DispersionModel& model,
                                 double rel_bracket = 0.005, double tol_nm = 0.05,
                                 int max_evals = 40);

struct PumpScanResult {
    double sigma = 0.0;
    double purity_value = 0.0;
    int evaluations = 0;
    std::string warning;
};

// Golden-section maximization of filtered purity over the pump width range
// [lo_factor, hi_factor] * sigma_matched, reusing a fixed phase-matching
// grid. Warns when the optimum sits on the scan boundary.
PumpScanResult select_pump_bandwidth(const Eigen::MatrixXcd& G, const FrequencyGrid& grid,
                                     double omega_pump_center, const SpectralFilter& filter,
                                     double center_s_nm, double center_i_nm,
                                     double sigma_matched, double lo_factor = 0.2,
                                     double hi_factor = 5.0, double rel_tol = 1e-3,
                                     int max_evals = 60);

} // namespace qpmkit
