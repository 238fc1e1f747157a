#include "qpmkit/pipeline.hpp"
#include "qpmkit/errors.hpp"
#include "qpmkit/units.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qpmkit {

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << text;
    if (!out) throw io_error("failed writing " + path);
}

std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct BandContext {
    DispersionModel model;
    InteractionConfig cfg;
    double deg_nm = 0.0;
    double omega_deg = 0.0;
    GvmSlopes slopes{};
    double sigma_T = 0.0;      // initial target width
    double sigma_matched = 0.0; // group-velocity matched pump width
};

BandContext make_context(double wavelength_nm, double length_m, const std::string& axes,
                         const std::string& dispersion_path) {
    if (!(wavelength_nm > 0.0)) throw config_error("wavelength must be positive");
    BandContext ctx{DispersionModel::load(dispersion_path)};
    ctx.cfg.lambda_pump_nm = 0.5 * wavelength_nm;
    parse_axes(axes, ctx.cfg);
    ctx.cfg.crystal_length_m = length_m;
    ctx.cfg.validate();
    ctx.deg_nm = wavelength_nm;
    ctx.omega_deg = ctx.cfg.omega_degenerate();
    ctx.slopes = gvm_slopes(ctx.cfg, ctx.model);
    const double gsum = ctx.slopes.gamma_s + ctx.slopes.gamma_i;
    if (!(gsum > 0.0))
        throw numeric_error("group-velocity slopes are not both positive here; "
                            "this interaction cannot be made separable");
    ctx.sigma_T = 1.0 / (0.25 * ctx.cfg.crystal_length_m * gsum);
    ctx.sigma_matched = 2.0 * std::sqrt(2.0) * ctx.sigma_T;
    return ctx;
}

FrequencyGrid sym_grid(const BandContext& ctx, double span_s_nm, double span_i_nm,
                       std::size_t count) {
    return make_grid(ctx.omega_deg, bandwidth_nm_to_omega(span_s_nm, ctx.deg_nm), count,
                     ctx.omega_deg, bandwidth_nm_to_omega(span_i_nm, ctx.deg_nm), count);
}

const SpectralFilter& narrowest(const std::vector<SpectralFilter>& fs) {
    return *std::min_element(fs.begin(), fs.end(), [](const auto& a, const auto& b) {
        return a.bandwidth_nm < b.bandwidth_nm;
    });
}

const SpectralFilter& widest(const std::vector<SpectralFilter>& fs) {
    return *std::max_element(fs.begin(), fs.end(), [](const auto& a, const auto& b) {
        return a.bandwidth_nm < b.bandwidth_nm;
    });
}

nlohmann::json filters_json(const std::vector<SpectralFilter>& fs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fs)
        arr.push_back({{"shape", filter_shape_name(f.shape)},
                       {"bandwidth_nm", f.bandwidth_nm}});
    return arr;
}

struct ProfileAssessment {
    PolingProfile profile;
    double sigma_pump = 0.0;
    double separation_nm = 0.0;
    double peak_s_nm = 0.0;
    double peak_i_nm = 0.0;
    double sigma_s = 0.0; // fitted marginal widths, rad/s
    double sigma_i = 0.0;
    std::vector<FilterResult> table;
    PeriodAdjustResult adjust;
    PumpScanResult scan;
};

// Shared post-processing: optional period retune, pump width selection (or a
// fixed width), fitted marginal widths, then one purity figure per filter on
// that filter's own grid.
ProfileAssessment assess_profile(const PolingProfile& p, const BandContext& ctx,
                                 const std::vector<SpectralFilter>& filters,
                                 std::size_t grid_count, double span_override_nm,
                                 bool retune, double fixed_pump_sigma) {
    ProfileAssessment out;
    out.profile = p;
    const SpectralFilter& fn = narrowest(filters);
    const SpectralFilter& fw = widest(filters);
    const double omega_pump = ctx.cfg.omega_pump();

    const double step4_span = std::max(3.0 * fn.bandwidth_nm, 24.0);
    const FrequencyGrid g4 = sym_grid(ctx, step4_span, step4_span, 256);
    if (retune) {
        const PumpSpectrum prov =
            PumpSpectrum::gaussian_pump(omega_pump, ctx.sigma_matched);
        out.adjust = adjust_period(p, prov, fn, g4, ctx.cfg, ctx.model);
        out.profile = out.adjust.profile;
    }

    const double scan_span = std::max(3.0 * fw.bandwidth_nm, 24.0);
    const FrequencyGrid gs = sym_grid(ctx, scan_span, scan_span, 256);
    const Eigen::MatrixXcd G = phase_matching_grid(out.profile, gs, ctx.cfg, ctx.model);
    if (fixed_pump_sigma > 0.0) {
        out.sigma_pump = fixed_pump_sigma;
    } else {
        out.scan = select_pump_bandwidth(G, gs, omega_pump, fw, ctx.deg_nm, ctx.deg_nm,
                                         ctx.sigma_matched);
        out.sigma_pump = out.scan.sigma;
    }
    const PumpSpectrum pump = PumpSpectrum::gaussian_pump(omega_pump, out.sigma_pump);

    const MarginalSigmas msig = fit_marginal_sigmas(compute_jsa(G, pump, gs));
    out.sigma_s = msig.sigma_s;
    out.sigma_i = msig.sigma_i;

    {
        const Jsa j4 = compute_jsa(out.profile, pump, g4, ctx.cfg, ctx.model);
        const MarginalPeaks pk = marginal_peaks(apply_filter(j4, fn, ctx.deg_nm, ctx.deg_nm));
        out.peak_s_nm = nm_from_omega(pk.omega_s);
        out.peak_i_nm = nm_from_omega(pk.omega_i);
        out.separation_nm = out.peak_s_nm - out.peak_i_nm;
    }

    const double sig_s_nm = bandwidth_omega_to_nm(out.sigma_s, ctx.deg_nm);
    const double sig_i_nm = bandwidth_omega_to_nm(out.sigma_i, ctx.deg_nm);
    for (const auto& f : filters) {
        FilterResult r;
        r.filter = f;
        r.grid_count = grid_count;
        r.span_s_nm = std::max(3.0 * f.bandwidth_nm, 8.0 * sig_s_nm);
        r.span_i_nm = std::max(3.0 * f.bandwidth_nm, 8.0 * sig_i_nm);
        if (span_override_nm > 0.0) r.span_s_nm = r.span_i_nm = span_override_nm;
        const FrequencyGrid gf = sym_grid(ctx, r.span_s_nm, r.span_i_nm, grid_count);
        const Jsa jf = compute_jsa(out.profile, pump, gf, ctx.cfg, ctx.model);
        r.purity_optimized = purity(apply_filter(jf, f, ctx.deg_nm, ctx.deg_nm).f);
        out.table.push_back(r);
    }
    return out;
}

nlohmann::json assessment_json(const ProfileAssessment& a, const BandContext& ctx) {
    return {
        {"period_um", a.profile.period_m * 1e6},
        {"pump_sigma_rad_s", a.sigma_pump},
        {"pump_sigma_over_matched", a.sigma_pump / ctx.sigma_matched},
        {"peak_separation_nm", a.separation_nm},
        {"peak_s_nm", a.peak_s_nm},
        {"peak_i_nm", a.peak_i_nm},
        {"sigma_s_nm", bandwidth_omega_to_nm(a.sigma_s, ctx.deg_nm)},
        {"sigma_i_nm", bandwidth_omega_to_nm(a.sigma_i, ctx.deg_nm)},
    };
}

nlohmann::json conventions_json() {
    return {
        {"pump_amplitude", "exp(-((w - w0) / sigma)^2)"},
        {"gaussian_filter", "amplitude whose intensity FWHM equals the bandwidth"},
        {"rectangular_filter", "closed wavelength passband, edges included"},
        {"purity", "sum of squared normalized Schmidt weights of the amplitude"},
        {"grid_policy", "per filter: span_axis = max(3 x bandwidth, 8 x fitted sigma)"},
    };
}

} // namespace

std::vector<SpectralFilter> default_filters() {
    std::vector<SpectralFilter> fs;
    for (const double bw : {8.0, 16.0, 25.0, 40.0})
        fs.push_back(parse_filter("rectangular", bw));
    return fs;
}

void parse_axes(const std::string& spec, InteractionConfig& cfg) {
    std::istringstream ss(spec);
    std::string p, s, i;
    if (!std::getline(ss, p, ',') || !std::getline(ss, s, ',') || !std::getline(ss, i))
        throw config_error("axes must be three comma-separated letters, e.g. y,y,z");
    cfg.pump_axis = axis_from_string(p);
    cfg.signal_axis = axis_from_string(s);
    cfg.idler_axis = axis_from_string(i);
}

DesignOutcome run_design(const DesignRequest& req) {
    if (req.grid_count < 16) throw config_error("grid needs at least 16 samples per axis");
    if (req.iterations < 0) throw config_error("iteration count cannot be negative");
    if (!(req.rate_target > 0.0) || !(req.rate_poling > 0.0))
        throw config_error("learning rates must be positive");
    if (!(req.length_mm > 0.0)) throw config_error("crystal length must be positive");
    if (req.min_feature_um < 0.0) throw config_error("feature floor cannot be negative");

    const std::vector<SpectralFilter> filters =
        req.filters.empty() ? default_filters() : req.filters;
    const auto t0 = clock_type::now();
    const BandContext ctx =
        make_context(req.wavelength_nm, req.length_mm * 1e-3, req.axes, req.dispersion_path);

    const double period = nominal_period(ctx.cfg, ctx.model);
    const double min_feature = req.min_feature_um * 1e-6;
    if (!(min_feature < 0.5 * period))
        throw config_error("feature floor exceeds half the poling period");

    DesignOutcome out;
    out.sigma_target_initial = ctx.sigma_T;
    out.target = {ctx.omega_deg, ctx.sigma_T};

    nlohmann::json timing;
    LearnRunConfig lc;
    lc.rate_target = req.rate_target;
    lc.rate_poling = req.rate_poling;
    lc.max_iterations = req.iterations;
    const double half_w =
        0.5 * bandwidth_nm_to_omega(widest(filters).bandwidth_nm, ctx.deg_nm);
    lc.slice_half_span = std::max(3.0 * ctx.sigma_T, 1.15 * half_w);

    PolingProfile learned;
    LearnResult lr;
    if (!req.periodic) {
        // Slightly raised feature floor so the period retune cannot push a
        // stored duty cycle below the real one.
        const double mf_learn = min_feature / 0.995;
        PolingProfile init = gaussian_init(period, ctx.cfg.crystal_length_m, mf_learn,
                                           0.25 * ctx.cfg.crystal_length_m);
        const auto t_learn = clock_type::now();
        lr = run_learning_loop(init, out.target, lc, ctx.cfg, ctx.model);
        timing["learning"] = seconds_since(t_learn);
        learned = make_profile(init.period_m, init.crystal_length_m, min_feature,
                               std::move(init.duty));
    } else {
        learned = periodic_profile(period, ctx.cfg.crystal_length_m, min_feature);
    }
    out.cost_history = lr.cost_history;
    out.iterations = lr.iterations;
    out.converged = lr.converged;

    const auto t_opt = clock_type::now();
    const ProfileAssessment opt = assess_profile(learned, ctx, filters, req.grid_count,
                                                 req.grid_span_nm, true, 0.0);
    timing["assessment"] = seconds_since(t_opt);

    ProfileAssessment base;
    if (req.periodic) {
        base = opt;
    } else {
        const auto t_base = clock_type::now();
        base = assess_profile(
            periodic_profile(period, ctx.cfg.crystal_length_m, min_feature), ctx, filters,
            req.grid_count, req.grid_span_nm, true, 0.0);
        timing["baseline"] = seconds_since(t_base);
    }

    out.profile = opt.profile;
    out.baseline = base.profile;
    out.sigma_pump = opt.sigma_pump;
    out.sigma_pump_baseline = base.sigma_pump;
    out.separation_nm = opt.separation_nm;
    out.peak_s_nm = opt.peak_s_nm;
    out.peak_i_nm = opt.peak_i_nm;
    out.sigma_s_nm = bandwidth_omega_to_nm(opt.sigma_s, ctx.deg_nm);
    out.sigma_i_nm = bandwidth_omega_to_nm(opt.sigma_i, ctx.deg_nm);
    out.unequal_marginals =
        std::abs(out.sigma_s_nm - out.sigma_i_nm) >
        0.02 * std::max(out.sigma_s_nm, out.sigma_i_nm);
    out.filters = opt.table;
    for (std::size_t i = 0; i < out.filters.size(); ++i)
        out.filters[i].purity_baseline = base.table[i].purity_optimized;

    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : out.filters)
        table.push_back({{"shape", filter_shape_name(r.filter.shape)},
                         {"bandwidth_nm", r.filter.bandwidth_nm},
                         {"purity", r.purity_optimized},
                         {"baseline_purity", r.purity_baseline},
                         {"grid_count", r.grid_count},
                         {"span_s_nm", r.span_s_nm},
                         {"span_i_nm", r.span_i_nm}});

    timing["total"] = seconds_since(t0);
    nlohmann::json report{
        {"tool", "qpmkit"},
        {"mode", req.periodic ? "periodic" : "optimized"},
        {"request",
         {{"wavelength_nm", req.wavelength_nm},
          {"length_mm", req.length_mm},
          {"min_feature_um", req.min_feature_um},
          {"filters", filters_json(filters)},
          {"grid_count", req.grid_count},
          {"grid_span_nm", req.grid_span_nm},
          {"iterations", req.iterations},
          {"rate_target", req.rate_target},
          {"rate_poling", req.rate_poling},
          {"axes", req.axes},
          {"dispersion", req.dispersion_path}}},
        {"dispersion_file_hash", ctx.model.source_hash()},
        {"crystal", ctx.model.crystal_name()},
        {"interaction",
         {{"pump_center_nm", ctx.cfg.lambda_pump_nm},
          {"degenerate_nm", ctx.deg_nm},
          {"gamma_s_s_per_m", ctx.slopes.gamma_s},
          {"gamma_i_s_per_m", ctx.slopes.gamma_i},
          {"sigma_target_initial_rad_s", ctx.sigma_T},
          {"pump_sigma_matched_rad_s", ctx.sigma_matched},
          {"nominal_period_um", period * 1e6},
          {"periods", out.profile.periods()}}},
        {"learning",
         {{"enabled", !req.periodic},
          {"iterations_run", lr.iterations},
          {"converged", lr.converged},
          {"initial_cost", lr.cost_history.empty() ? 0.0 : lr.cost_history.front()},
          {"final_cost", lr.cost_history.empty() ? 0.0 : lr.cost_history.back()},
          {"slice_half_span_rad_s", lc.slice_half_span},
          {"slice_samples", lc.samples}}},
        {"target",
         {{"center_rad_s", out.target.omega_center},
          {"center_offset_nm",
           nm_from_omega(out.target.omega_center) - ctx.deg_nm},
          {"sigma_rad_s", out.target.sigma}}},
        {"period_adjustment",
         {{"initial_um", period * 1e6},
          {"final_um", opt.profile.period_m * 1e6},
          {"peak_separation_nm", opt.separation_nm},
          {"evaluations", opt.adjust.evaluations},
          {"warning", opt.adjust.warning}}},
        {"pump",
         {{"kind", "gaussian"},
          {"center_nm", ctx.cfg.lambda_pump_nm},
          {"sigma_rad_s", opt.sigma_pump},
          {"sigma_over_matched", opt.sigma_pump / ctx.sigma_matched},
          {"scan_evaluations", opt.scan.evaluations},
          {"warning", opt.scan.warning}}},
        {"marginals",
         {{"sigma_s_nm", out.sigma_s_nm},
          {"sigma_i_nm", out.sigma_i_nm},
          {"unequal_marginals", out.unequal_marginals},
          {"peak_s_nm", out.peak_s_nm},
          {"peak_i_nm", out.peak_i_nm}}},
        {"purity_table", table},
        {"optimized", assessment_json(opt, ctx)},
        {"baseline", assessment_json(base, ctx)},
        {"files",
         {{"poling_csv", "poling.csv"},
          {"poling_sidecar", "poling.csv.meta.json"},
          {"cost_history_csv", "cost_history.csv"},
          {"report_json", "report.json"}}},
        {"timing_s", timing},
        {"conventions", conventions_json()},
    };
    out.report = report;

    fs::create_directories(req.out_dir);
    const fs::path dir(req.out_dir);
    export_poling_csv(out.profile, (dir / "poling.csv").string(), ctx.model.source_hash());
    std::ostringstream hist;
    hist << "iteration,cost\n";
    for (std::size_t i = 0; i < out.cost_history.size(); ++i)
        hist << i << ',' << fmt_g17(out.cost_history[i]) << '\n';
    write_text((dir / "cost_history.csv").string(), hist.str());
    write_text((dir / "report.json").string(), report.dump(2) + "\n");
    return out;
}

EvaluateOutcome run_evaluate(const EvaluateRequest& req) {
    if (req.grid_count < 16) throw config_error("grid needs at least 16 samples per axis");
    const std::vector<SpectralFilter> filters =
        req.filters.empty() ? default_filters() : req.filters;
    ImportedProfile imp = import_poling_csv(req.profile_csv);
    const BandContext ctx = make_context(req.wavelength_nm, imp.profile.crystal_length_m,
                                         req.axes, req.dispersion_path);
    std::string hash_note;
    if (imp.dispersion_file_hash != ctx.model.source_hash())
        hash_note = "profile was designed against a different dispersion file";

    const ProfileAssessment a = assess_profile(imp.profile, ctx, filters, req.grid_count,
                                               req.grid_span_nm, false, req.pump_sigma);

    EvaluateOutcome out;
    out.profile = a.profile;
    out.sigma_pump = a.sigma_pump;
    out.peak_s_nm = a.peak_s_nm;
    out.peak_i_nm = a.peak_i_nm;
    out.sigma_s_nm = bandwidth_omega_to_nm(a.sigma_s, ctx.deg_nm);
    out.sigma_i_nm = bandwidth_omega_to_nm(a.sigma_i, ctx.deg_nm);
    out.filters = a.table;

    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : a.table)
        table.push_back({{"shape", filter_shape_name(r.filter.shape)},
                         {"bandwidth_nm", r.filter.bandwidth_nm},
                         {"purity", r.purity_optimized},
                         {"grid_count", r.grid_count},
                         {"span_s_nm", r.span_s_nm},
                         {"span_i_nm", r.span_i_nm}});
    nlohmann::json report{
        {"tool", "qpmkit"},
        {"mode", "evaluate"},
        {"profile_csv", req.profile_csv},
        {"dispersion_file_hash", ctx.model.source_hash()},
        {"profile_dispersion_file_hash", imp.dispersion_file_hash},
        {"hash_note", hash_note},
        {"wavelength_nm", req.wavelength_nm},
        {"axes", req.axes},
        {"pump",
         {{"kind", "gaussian"},
          {"center_nm", ctx.cfg.lambda_pump_nm},
          {"sigma_rad_s", a.sigma_pump},
          {"sigma_was_scanned", !(req.pump_sigma > 0.0)},
          {"scan_evaluations", a.scan.evaluations}}},
        {"marginals",
         {{"sigma_s_nm", out.sigma_s_nm},
          {"sigma_i_nm", out.sigma_i_nm},
          {"peak_s_nm", a.peak_s_nm},
          {"peak_i_nm", a.peak_i_nm},
          {"peak_separation_nm", a.separation_nm}}},
        {"purity_table", table},
        {"conventions", conventions_json()},
    };
    out.report = report;
    if (!req.out_path.empty()) write_text(req.out_path, report.dump(2) + "\n");
    return out;
}

nlohmann::json run_dump(const DumpRequest& req) {
    if (req.grid_count < 16) throw config_error("grid needs at least 16 samples per axis");
    if (req.profile_csv.empty() && !req.periodic)
        throw config_error("dump needs a profile file or the periodic flag");
    if (!req.profile_csv.empty() && req.periodic)
        throw config_error("pass either a profile file or the periodic flag, not both");

    PolingProfile profile;
    std::string source;
    if (!req.profile_csv.empty()) {
        ImportedProfile imp = import_poling_csv(req.profile_csv);
        profile = std::move(imp.profile);
        source = req.profile_csv;
    }
    const BandContext ctx =
        make_context(req.wavelength_nm,
                     source.empty() ? 10e-3 : profile.crystal_length_m, req.axes,
                     req.dispersion_path);
    if (source.empty()) {
        profile = periodic_profile(nominal_period(ctx.cfg, ctx.model),
                                   ctx.cfg.crystal_length_m, 0.0);
        source = "periodic";
    }
    const double sigma_p = req.pump_sigma > 0.0 ? req.pump_sigma : ctx.sigma_matched;
    const PumpSpectrum pump = PumpSpectrum::gaussian_pump(ctx.cfg.omega_pump(), sigma_p);

    double span_s_nm = req.grid_span_nm, span_i_nm = req.grid_span_nm;
    if (!(req.grid_span_nm > 0.0)) {
        const double prov_span =
            std::max(req.filter ? 3.0 * req.filter->bandwidth_nm : 0.0, 24.0);
        const FrequencyGrid gp = sym_grid(ctx, prov_span, prov_span, 256);
        const MarginalSigmas ms =
            fit_marginal_sigmas(compute_jsa(profile, pump, gp, ctx.cfg, ctx.model));
        const double bw = req.filter ? req.filter->bandwidth_nm : 0.0;
        span_s_nm = std::max(3.0 * bw, 8.0 * bandwidth_omega_to_nm(ms.sigma_s, ctx.deg_nm));
        span_i_nm = std::max(3.0 * bw, 8.0 * bandwidth_omega_to_nm(ms.sigma_i, ctx.deg_nm));
    }
    const FrequencyGrid grid = sym_grid(ctx, span_s_nm, span_i_nm, req.grid_count);
    Jsa jsa = compute_jsa(profile, pump, grid, ctx.cfg, ctx.model);
    if (req.filter) jsa = apply_filter(jsa, *req.filter, ctx.deg_nm, ctx.deg_nm);

    write_intensity_csv(jsa, req.out_prefix + ".csv", req.log_scale);

    nlohmann::json sidecar{
        {"tool", "qpmkit"},
        {"mode", "dump"},
        {"profile", source},
        {"grid",
         {{"count_s", grid.omega_s.size()},
          {"count_i", grid.omega_i.size()},
          {"center_nm", ctx.deg_nm},
          {"span_s_nm", span_s_nm},
          {"span_i_nm", span_i_nm}}},
        {"pump",
         {{"kind", "gaussian"},
          {"center_nm", ctx.cfg.lambda_pump_nm},
          {"sigma_rad_s", sigma_p}}},
        {"filters", req.filter ? filters_json({*req.filter}) : nlohmann::json::array()},
        {"log_scale", req.log_scale},
        {"normalization", "intensity scaled to a peak of 1"},
        {"purity", purity(jsa.f)},
        {"schmidt_coefficients", schmidt_coefficients(jsa.f, 16)},
        {"dispersion_file_hash", ctx.model.source_hash()},
        {"csv", req.out_prefix + ".csv"},
    };
    write_text(req.out_prefix + ".json", sidecar.dump(2) + "\n");
    return sidecar;
}

GvmInfo gvm_info(double wavelength_nm, const std::string& axes,
                 const std::string& dispersion_path) {
    const BandContext ctx = make_context(wavelength_nm, 10e-3, axes, dispersion_path);
    GvmInfo info;
    info.gamma_s = ctx.slopes.gamma_s;
    info.gamma_i = ctx.slopes.gamma_i;
    info.period_um = nominal_period(ctx.cfg, ctx.model) * 1e6;
    info.gvm_wavelength_nm = find_gvm_wavelength(ctx.cfg, ctx.model);
    return info;
}

} // namespace qpmkit
