#include "qpmkit/errors.hpp"
#include "qpmkit/kernels.hpp"
#include "qpmkit/pipeline.hpp"
#include "qpmkit/units.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace qpmkit;

std::vector<SpectralFilter> parse_filter_list(const std::string& spec) {
    if (spec.empty()) return default_filters();
    std::string shape = "rectangular";
    std::string list = spec;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        shape = spec.substr(0, colon);
        list = spec.substr(colon + 1);
    }
    std::vector<SpectralFilter> fs;
    std::istringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        double bw = 0.0;
        try {
            bw = std::stod(item);
        } catch (const std::exception&) {
            throw config_error("filter bandwidth '" + item + "' is not a number");
        }
        fs.push_back(parse_filter(shape, bw));
    }
    if (fs.empty()) throw config_error("filter list is empty");
    return fs;
}

void parse_grid_spec(const std::string& spec, std::size_t& count, double& span_nm) {
    if (spec.empty()) return;
    const auto colon = spec.find(':');
    try {
        count = static_cast<std::size_t>(std::stoul(spec.substr(0, colon)));
        if (colon != std::string::npos) span_nm = std::stod(spec.substr(colon + 1));
    } catch (const std::exception&) {
        throw config_error("grid spec must be count or count:span_nm");
    }
}

void parse_rates(const std::string& spec, double& ra, double& rb) {
    if (spec.empty()) return;
    const auto comma = spec.find(',');
    if (comma == std::string::npos)
        throw config_error("rates must be two comma-separated numbers");
    try {
        ra = std::stod(spec.substr(0, comma));
        rb = std::stod(spec.substr(comma + 1));
    } catch (const std::exception&) {
        throw config_error("rates must be two comma-separated numbers");
    }
}

int cmd_design(const DesignRequest& req, bool log_progress) {
    DesignOutcome out = run_design(req);
    std::printf("degenerate wavelength: %.6g nm (pump %.6g nm)\n", req.wavelength_nm,
                0.5 * req.wavelength_nm);
    std::printf("period: %.6f um -> %.6f um over %zu periods\n",
                out.report["period_adjustment"]["initial_um"].get<double>(),
                out.profile.period_m * 1e6, out.profile.periods());
    if (log_progress && !out.cost_history.empty()) {
        for (std::size_t i = 0; i < out.cost_history.size(); ++i)
            std::printf("  iter %4zu  cost %.8e\n", i, out.cost_history[i]);
    } else if (!out.cost_history.empty()) {
        std::printf("learning: %d iterations, cost %.4e -> %.4e%s\n", out.iterations,
                    out.cost_history.front(), out.cost_history.back(),
                    out.converged ? " (converged)" : "");
    }
    std::printf("pump sigma: %.6e rad/s (%.3f x matched)\n", out.sigma_pump,
                out.report["pump"]["sigma_over_matched"].get<double>());
    std::printf("peak separation: %.4g nm\n", out.separation_nm);
    std::printf("marginal widths: signal %.3f nm, idler %.3f nm%s\n", out.sigma_s_nm,
                out.sigma_i_nm, out.unequal_marginals ? " (unequal)" : "");
    std::printf("%-18s %12s %12s\n", "filter", "designed", "periodic");
    for (const auto& r : out.filters) {
        char name[32];
        std::snprintf(name, sizeof name, "%s %g nm",
                      filter_shape_name(r.filter.shape).c_str(), r.filter.bandwidth_nm);
        std::printf("%-18s %12.6f %12.6f\n", name, r.purity_optimized, r.purity_baseline);
    }
    std::printf("artifacts: %s\n", req.out_dir.c_str());
    return 0;
}

int cmd_evaluate(const EvaluateRequest& req) {
    EvaluateOutcome out = run_evaluate(req);
    std::printf("profile: %s (%zu periods, %.6f um)\n", req.profile_csv.c_str(),
                out.profile.periods(), out.profile.period_m * 1e6);
    std::printf("pump sigma: %.6e rad/s\n", out.sigma_pump);
    std::printf("peaks: signal %.4f nm, idler %.4f nm\n", out.peak_s_nm, out.peak_i_nm);
    std::printf("%-18s %12s\n", "filter", "purity");
    for (const auto& r : out.filters) {
        char name[32];
        std::snprintf(name, sizeof name, "%s %g nm",
                      filter_shape_name(r.filter.shape).c_str(), r.filter.bandwidth_nm);
        std::printf("%-18s %12.6f\n", name, r.purity_optimized);
    }
    if (!req.out_path.empty()) std::printf("report: %s\n", req.out_path.c_str());
    return 0;
}

int cmd_dump(const DumpRequest& req) {
    const nlohmann::json sidecar = run_dump(req);
    std::printf("wrote %s.csv and %s.json (purity %.6f)\n", req.out_prefix.c_str(),
                req.out_prefix.c_str(), sidecar["purity"].get<double>());
    return 0;
}

int cmd_gvm(double wavelength_nm, const std::string& axes, const std::string& dispersion,
            bool as_json) {
    const GvmInfo info = gvm_info(wavelength_nm, axes, dispersion);
    if (as_json) {
        nlohmann::json j{{"wavelength_nm", wavelength_nm},
                         {"gvm_wavelength_nm", info.gvm_wavelength_nm},
                         {"gamma_s_s_per_m", info.gamma_s},
                         {"gamma_i_s_per_m", info.gamma_i},
                         {"nominal_period_um", info.period_um}};
        std::printf("%s\n", j.dump(2).c_str());
    } else {
        std::printf("requested degenerate wavelength: %.6g nm\n", wavelength_nm);
        std::printf("gamma_s: %.6e s/m\ngamma_i: %.6e s/m\n", info.gamma_s, info.gamma_i);
        std::printf("nominal period: %.6f um\n", info.period_um);
        std::printf("group-velocity matched wavelength: %.2f nm\n",
                    info.gvm_wavelength_nm);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aperiodic poling designer for spectrally pure type-II SPDC"};
    app.require_subcommand(1);

    DesignRequest dreq;
    std::string d_filters, d_grid, d_rates;
    bool d_log = false;
    auto* design = app.add_subcommand("design", "optimize a poling profile");
    design->add_option("--wavelength-nm", dreq.wavelength_nm,
                       "degenerate signal/idler wavelength");
    design->add_option("--length-mm", dreq.length_mm, "crystal length");
    design->add_option("--lambda-min-um", dreq.min_feature_um,
                       "minimum poled feature size");
    design->add_option("--filters", d_filters,
                       "shape:bw,bw,... (default rectangular:8,16,25,40)");
    design->add_option("--grid", d_grid, "count or count:span_nm");
    design->add_option("--iters", dreq.iterations, "learning iterations");
    design->add_option("--rates", d_rates, "target,poling learning rates");
    design->add_option("--dispersion", dreq.dispersion_path, "dispersion JSON file");
    design->add_option("--axes", dreq.axes, "pump,signal,idler polarization axes");
    design->add_option("--out", dreq.out_dir, "artifact directory");
    design->add_flag("--periodic", dreq.periodic, "skip optimization (50% grating)");
    design->add_flag("--log", d_log, "print the full cost history");

    EvaluateRequest ereq;
    std::string e_filters, e_grid;
    auto* evaluate = app.add_subcommand("evaluate", "assess an exported profile");
    evaluate->add_option("--profile", ereq.profile_csv, "poling CSV file")->required();
    evaluate->add_option("--wavelength-nm", ereq.wavelength_nm,
                         "degenerate signal/idler wavelength");
    evaluate->add_option("--pump-sigma", ereq.pump_sigma,
                         "pump width in rad/s (omit to rescan)");
    evaluate->add_option("--filters", e_filters, "shape:bw,bw,...");
    evaluate->add_option("--grid", e_grid, "count or count:span_nm");
    evaluate->add_option("--dispersion", ereq.dispersion_path, "dispersion JSON file");
    evaluate->add_option("--axes", ereq.axes, "pump,signal,idler polarization axes");
    evaluate->add_option("--out", ereq.out_path, "report JSON path");

    DumpRequest jreq;
    std::string j_filters, j_grid;
    auto* dump = app.add_subcommand("dump-jsa", "write the joint spectral intensity");
    dump->add_option("--profile", jreq.profile_csv, "poling CSV file");
    dump->add_flag("--periodic", jreq.periodic, "use a 50% grating instead of a file");
    dump->add_option("--wavelength-nm", jreq.wavelength_nm,
                     "degenerate signal/idler wavelength");
    dump->add_option("--pump-sigma", jreq.pump_sigma,
                     "pump width in rad/s (omit for the matched width)");
    dump->add_option("--filters", j_filters, "at most one filter, shape:bw");
    dump->add_option("--grid", j_grid, "count or count:span_nm");
    dump->add_option("--dispersion", jreq.dispersion_path, "dispersion JSON file");
    dump->add_option("--axes", jreq.axes, "pump,signal,idler polarization axes");
    dump->add_option("--out", jreq.out_prefix, "output prefix (.csv/.json)");
    dump->add_flag("--log", jreq.log_scale, "write log10 of the normalized intensity");

    double g_wavelength = 1550.0;
    std::string g_axes = "y,y,z";
    std::string g_dispersion = "data/ktp_kato_takaoka.json";
    bool g_json = false;
    auto* gvm = app.add_subcommand("gvm", "group-velocity matching report");
    gvm->add_option("--wavelength-nm", g_wavelength,
                    "degenerate wavelength for the slope report");
    gvm->add_option("--dispersion", g_dispersion, "dispersion JSON file");
    gvm->add_option("--axes", g_axes, "pump,signal,idler polarization axes");
    gvm->add_flag("--json", g_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (design->parsed()) {
            dreq.filters = parse_filter_list(d_filters);
            parse_grid_spec(d_grid, dreq.grid_count, dreq.grid_span_nm);
            parse_rates(d_rates, dreq.rate_target, dreq.rate_poling);
            return cmd_design(dreq, d_log);
        }
        if (evaluate->parsed()) {
            ereq.filters = parse_filter_list(e_filters);
            parse_grid_spec(e_grid, ereq.grid_count, ereq.grid_span_nm);
            return cmd_evaluate(ereq);
        }
        if (dump->parsed()) {
            const auto fs = parse_filter_list(j_filters);
            if (!j_filters.empty()) {
                if (fs.size() != 1)
                    throw config_error("dump-jsa takes at most one filter");
                jreq.filter = fs.front();
            }
            parse_grid_spec(j_grid, jreq.grid_count, jreq.grid_span_nm);
            return cmd_dump(jreq);
        }
        if (gvm->parsed()) return cmd_gvm(g_wavelength, g_axes, g_dispersion, g_json);
    } catch (const config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
