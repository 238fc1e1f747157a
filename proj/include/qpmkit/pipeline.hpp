#pragma once

#include "qpmkit/dispersion.hpp"
#include "qpmkit/jsa.hpp"
#include "qpmkit/optimizer.hpp"
#include "qpmkit/poling.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace qpmkit {

std::vector<SpectralFilter> default_filters();

// "y,y,z" -> pump, signal, idler axes.
void parse_axes(const std::string& spec, InteractionConfig& cfg);

struct DesignRequest {
    double wavelength_nm = 1550.0; // degenerate signal/idler wavelength
    double length_mm = 10.0;
    double min_feature_um = 0.0;
    std::vector<SpectralFilter> filters; // empty = default_filters()
    std::size_t grid_count = 512;
    double grid_span_nm = 0.0; // 0 = per-filter span policy
    int iterations = 300;
    double rate_target = 0.005;
    double rate_poling = 0.015;
    std::string dispersion_path = "data/ktp_kato_takaoka.json";
    std::string axes = "y,y,z";
    std::string out_dir = "design_out";
    bool periodic = false;    // skip optimization, report the periodic grating
    bool log_progress = false;
};

struct FilterResult {
    SpectralFilter filter;
    double purity_optimized = 0.0;
    double purity_baseline = 0.0;
    std::size_t grid_count = 0;
    double span_s_nm = 0.0;
    double span_i_nm = 0.0;
};

struct DesignOutcome {
    PolingProfile profile;  // optimized profile after the period retune
    PolingProfile baseline; // periodic reference after its own retune
    GaussianTarget target;
    double sigma_pump = 0.0; // selected pump width, rad/s
    double sigma_pump_baseline = 0.0;
    double sigma_target_initial = 0.0;
    double separation_nm = 0.0; // optimized peak separation after retune
    double peak_s_nm = 0.0;
    double peak_i_nm = 0.0;
    double sigma_s_nm = 0.0; // fitted marginal widths of the optimized source
    double sigma_i_nm = 0.0;
    bool unequal_marginals = false;
    std::vector<FilterResult> filters;
    std::vector<double> cost_history;
    int iterations = 0;
    bool converged = false;
    nlohmann::json report;
};

// Full design run; writes report.json, poling.csv(+sidecar) and
// cost_history.csv into req.out_dir.
DesignOutcome run_design(const DesignRequest& req);

struct EvaluateRequest {
    std::string profile_csv;
    double wavelength_nm = 1550.0;
    double pump_sigma = 0.0; // rad/s; 0 = golden-section scan
    std::vector<SpectralFilter> filters;
    std::size_t grid_count = 512;
    double grid_span_nm = 0.0;
    std::string dispersion_path = "data/ktp_kato_takaoka.json";
    std::string axes = "y,y,z";
    std::string out_path; // report JSON; empty = stdout only
};

struct EvaluateOutcome {
    PolingProfile profile;
    double sigma_pump = 0.0;
    double peak_s_nm = 0.0;
    double peak_i_nm = 0.0;
    double sigma_s_nm = 0.0;
    double sigma_i_nm = 0.0;
    std::vector<FilterResult> filters; // purity_optimized carries the result
    nlohmann::json report;
};

EvaluateOutcome run_evaluate(const EvaluateRequest& req);

struct DumpRequest {
    std::string profile_csv; // empty with periodic=true synthesizes a grating
    bool periodic = false;
    double wavelength_nm = 1550.0;
    double pump_sigma = 0.0; // rad/s; 0 = group-velocity matched width
    std::optional<SpectralFilter> filter;
    std::size_t grid_count = 512;
    double grid_span_nm = 0.0;
    bool log_scale = false;
    std::string dispersion_path = "data/ktp_kato_takaoka.json";
    std::string axes = "y,y,z";
    std::string out_prefix = "jsa";
};

// Writes <prefix>.csv and the <prefix>.json sidecar; returns the sidecar.
nlohmann::json run_dump(const DumpRequest& req);

struct GvmInfo {
    double gvm_wavelength_nm = 0.0; // degenerate wavelength with equal slopes
    double gamma_s = 0.0;
    double gamma_i = 0.0;
    double period_um = 0.0; // nominal period at the requested wavelength
};

GvmInfo gvm_info(double wavelength_nm, const std::string& axes,
                 const std::string& dispersion_path);

} // namespace qpmkit
