#include "qpmkit/optimizer.hpp"
#include "qpmkit/errors.hpp"
#include "qpmkit/units.hpp"

#include <algorithm>
#include <cmath>

namespace qpmkit {

double target_value(const GaussianTarget& t, double omega) {
    const double d = omega - t.omega_center;
    return std::exp(-d * d / (2.0 * t.sigma * t.sigma));
}

std::vector<double> target_curve(const GaussianTarget& t,
                                 const std::vector<double>& omega) {
    std::vector<double> out(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) out[i] = target_value(t, omega[i]);
    return out;
}

double quadratic_cost(const std::vector<double>& h, const std::vector<double>& t) {
    if (h.size() != t.size())
        throw config_error("cost needs slice and target of equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double r = h[i] - t[i];
        acc += r * r;
    }
    return acc;
}

void adam_step(AdamState& st, double* params, const double* grad, std::size_t n) {
    if (st.m.empty()) {
        st.m.assign(n, 0.0);
        st.v.assign(n, 0.0);
    }
    if (st.m.size() != n)
        throw config_error("adam state was initialized for a different parameter count");
    ++st.steps;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.steps));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.steps));
    for (std::size_t i = 0; i < n; ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        params[i] -= st.rate * mhat / (std::sqrt(vhat) + st.epsilon);
    }
}

void optimize_pump_target(GaussianTarget& t, const std::vector<double>& h,
                          const std::vector<double>& omega_samples, AdamState& state,
                          double sigma_ref) {
    if (h.size() != omega_samples.size())
        throw config_error("slice and sample axis lengths differ");
    if (!(sigma_ref > 0.0)) throw config_error("sigma_ref must be positive");

    // Work on (center, width) / sigma_ref so the step size is scale free.
    const double s2 = t.sigma * t.sigma;
    double g_center = 0.0, g_sigma = 0.0;
    for (std::size_t l = 0; l < h.size(); ++l) {
        const double d = omega_samples[l] - t.omega_center;
        const double tv = std::exp(-d * d / (2.0 * s2));
        const double r = h[l] - tv;
        g_center += -2.0 * r * tv * d / s2;
        g_sigma += -2.0 * r * tv * d * d / (s2 * t.sigma);
    }
    double params[2] = {t.omega_center / sigma_ref, t.sigma / sigma_ref};
    const double grad[2] = {g_center * sigma_ref, g_sigma * sigma_ref};
    adam_step(state, params, grad, 2);
    t.omega_center = params[0] * sigma_ref;
    t.sigma = std::max(params[1] * sigma_ref, 1e-3 * sigma_ref);
}

void optimize_poling(PolingProfile& p, const SliceGradient& slice,
                     const std::vector<double>& target, AdamState& state) {
    const std::size_t n = p.duty.size();
    if (slice.periods != n)
        throw config_error("slice gradient does not match the profile's period count");
    if (slice.H.size() != target.size())
        throw config_error("slice and target lengths differ");
    std::vector<double> grad(n, 0.0);
    for (std::size_t l = 0; l < slice.samples; ++l) {
        const double r2 = 2.0 * (slice.H[l] - target[l]);
        const double* row = slice.dH.data() + l * n;
        for (std::size_t j = 0; j < n; ++j) grad[j] += r2 * row[j];
    }
    adam_step(state, p.duty.data(), grad.data(), n);
    const double lo = p.duty_lo(), hi = p.duty_hi();
    for (double& a : p.duty) a = std::clamp(a, lo, hi);
}

LearnResult run_learning_loop(PolingProfile& p, GaussianTarget& t,
                              const LearnRunConfig& lc, const InteractionConfig& cfg,
                              const DispersionModel& model) {
    if (lc.max_iterations < 0) throw config_error("iteration count cannot be negative");
    if (lc.samples < 2) throw config_error("slice needs at least two samples");
    if (!(t.sigma > 0.0)) throw config_error("target width must be positive");

    const double sigma_ref = t.sigma;
    const double w0 = cfg.omega_degenerate();
    const double half = lc.slice_half_span > 0.0 ? lc.slice_half_span : 3.0 * t.sigma;
    std::vector<double> omega(lc.samples);
    for (std::size_t i = 0; i < lc.samples; ++i)
        omega[i] = w0 - half +
                   2.0 * half * static_cast<double>(i) / static_cast<double>(lc.samples - 1);

    AdamState state_a{.rate = lc.rate_target};
    AdamState state_b{.rate = lc.rate_poling};

    LearnResult res;
    res.cost_history.reserve(static_cast<std::size_t>(lc.max_iterations) + 1);
    int rises = 0;
    const double omega_pump = cfg.omega_pump();
    for (int it = 0; it < lc.max_iterations; ++it) {
        const SliceGradient sg = h_slice_with_gradient(omega, p, omega_pump, cfg, model);
        const std::vector<double> tv = target_curve(t, omega);
        const double c = quadratic_cost(sg.H, tv);
        if (!res.cost_history.empty() && c > res.cost_history.back()) {
            if (++rises >= 50)
                throw numeric_error(
                    "learning cost rose 50 iterations in a row; lower the rates");
        } else {
            rises = 0;
        }
        res.cost_history.push_back(c);
        if (it >= lc.convergence_window) {
            const double prev =
                res.cost_history[res.cost_history.size() - 1 -
                                 static_cast<std::size_t>(lc.convergence_window)];
            if (std::abs(c - prev) < lc.convergence_rel * std::max(prev, 1e-300)) {
                res.converged = true;
                break;
            }
        }
        optimize_pump_target(t, sg.H, omega, state_a, sigma_ref);
        optimize_poling(p, sg, tv, state_b);
        ++res.iterations;
    }
    // Cost of the state the loop leaves behind.
    const std::vector<double> hf = h_slice(omega, p, omega_pump, cfg, model);
    res.cost_history.push_back(quadratic_cost(hf, target_curve(t, omega)));
    return res;
}

namespace {

double peak_separation_nm(const PolingProfile& p, const PumpSpectrum& pump,
                          const SpectralFilter& filter, const FrequencyGrid& grid,
                          const InteractionConfig& cfg, const DispersionModel& model) {
    const Jsa jsa = compute_jsa(p, pump, grid, cfg, model);
    const double deg_nm = nm_from_omega(cfg.omega_degenerate());
    const Jsa filtered = apply_filter(jsa, filter, deg_nm, deg_nm);
    const MarginalPeaks pk = marginal_peaks(filtered);
    return nm_from_omega(pk.omega_s) - nm_from_omega(pk.omega_i);
}

} // namespace

PeriodAdjustResult adjust_period(const PolingProfile& p, const PumpSpectrum& pump,
                                 const SpectralFilter& filter, const FrequencyGrid& grid,
                                 const InteractionConfig& cfg, const DispersionModel& model,
                                 double rel_bracket, double tol_nm, int max_evals) {
    if (!(rel_bracket > 0.0 && rel_bracket < 0.5))
        throw config_error("period bracket must be a small positive fraction");

    PeriodAdjustResult res;
    res.profile = p;
    int evals = 0;
    auto sep_at = [&](double period) {
        ++evals;
        return peak_separation_nm(with_period(p, period), pump, filter, grid, cfg, model);
    };

    struct Sample {
        double period, sep;
    };
    Sample mid{p.period_m, sep_at(p.period_m)};
    Sample best = mid;
    auto consider = [&](const Sample& s) {
        if (std::abs(s.sep) < std::abs(best.sep)) best = s;
    };

    // Largest period the profile validator accepts with the period count
    // fixed: stretching beyond crystal_length / (N - 1) would push the poled
    // region more than one period past the crystal end.
    double hi_cap = p.period_m * (1.0 + rel_bracket);
    if (p.duty.size() > 1) {
        const double n1 = static_cast<double>(p.duty.size() - 1);
        hi_cap = std::min(hi_cap, 0.999999 * p.crystal_length_m / n1);
    }

    if (std::abs(mid.sep) >= tol_nm) {
        Sample lo{p.period_m * (1.0 - rel_bracket), 0.0};
        Sample hi{std::max(hi_cap, p.period_m), 0.0};
        lo.sep = sep_at(lo.period);
        hi.sep = sep_at(hi.period);
        consider(lo);
        consider(hi);

        Sample a{}, b{};
        bool bracketed = true;
        if (lo.sep * mid.sep < 0.0) {
            a = lo;
            b = mid;
        } else if (mid.sep * hi.sep < 0.0) {
            a = mid;
            b = hi;
        } else {
            bracketed = false;
            res.warning = "peak separation does not change sign across the period "
                          "bracket; keeping the best sampled period";
        }
        if (bracketed) {
            while (evals < max_evals) {
                Sample m{0.5 * (a.period + b.period), 0.0};
                m.sep = sep_at(m.period);
                consider(m);
                if (std::abs(m.sep) < tol_nm) break;
                if (a.sep * m.sep < 0.0)
                    b = m;
                else
                    a = m;
            }
            if (std::abs(best.sep) >= tol_nm)
                res.warning = "period bisection hit the evaluation budget before "
                              "closing the peak separation";
        }
    }

    res.profile = with_period(p, best.period);
    res.separation_nm = best.sep;
    res.evaluations = evals;
    return res;
}

PumpScanResult select_pump_bandwidth(const Eigen::MatrixXcd& G, const FrequencyGrid& grid,
                                     double omega_pump_center, const SpectralFilter& filter,
                                     double center_s_nm, double center_i_nm,
                                     double sigma_matched, double lo_factor,
                                     double hi_factor, double rel_tol, int max_evals) {
    if (!(sigma_matched > 0.0)) throw config_error("matched pump width must be positive");
    if (!(lo_factor > 0.0 && hi_factor > lo_factor))
        throw config_error("pump scan range is empty");

    PumpScanResult res;
    auto purity_at = [&](double sigma) {
        ++res.evaluations;
        const PumpSpectrum pump = PumpSpectrum::gaussian_pump(omega_pump_center, sigma);
        const Jsa jsa = compute_jsa(G, pump, grid);
        return purity(apply_filter(jsa, filter, center_s_nm, center_i_nm).f);
    };

    const double invphi = 0.6180339887498948482;
    double a = lo_factor * sigma_matched;
    double b = hi_factor * sigma_matched;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = purity_at(c);
    double fd = purity_at(d);
    while (b - a > rel_tol * sigma_matched && res.evaluations < max_evals) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = purity_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = purity_at(d);
        }
    }
    if (fc > fd) {
        res.sigma = c;
        res.purity_value = fc;
    } else {
        res.sigma = d;
        res.purity_value = fd;
    }
    const double lo_edge = lo_factor * sigma_matched;
    const double hi_edge = hi_factor * sigma_matched;
    if (res.sigma < lo_edge * 1.02 || res.sigma > hi_edge * 0.98)
        res.warning = "pump width optimum sits at the scan boundary";
    return res;
}

} // namespace qpmkit
