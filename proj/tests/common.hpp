#pragma once

#include "qpmkit/dispersion.hpp"
#include "qpmkit/poling.hpp"
#include "qpmkit/units.hpp"

#include <complex>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

namespace testkit {

inline const std::string& data_file() {
    static const std::string p = QPMKIT_DATA_FILE;
    return p;
}

inline const std::string& cli_path() {
    static const std::string p = QPMKIT_CLI_PATH;
    return p;
}

inline const std::string& scratch_dir() {
    static const std::string p = QPMKIT_SCRATCH_DIR;
    return p;
}

inline std::string scratch_path(const std::string& name) {
    std::filesystem::create_directories(scratch_dir());
    return (std::filesystem::path(scratch_dir()) / name).string();
}

inline const qpmkit::DispersionModel& model() {
    static const qpmkit::DispersionModel m = qpmkit::DispersionModel::load(data_file());
    return m;
}

// Type-II configuration used throughout: pump and signal on y, idler on z.
inline qpmkit::InteractionConfig config_for(double degenerate_nm,
                                            double length_m = 10e-3) {
    qpmkit::InteractionConfig cfg;
    cfg.lambda_pump_nm = 0.5 * degenerate_nm;
    cfg.pump_axis = qpmkit::Axis::y;
    cfg.signal_axis = qpmkit::Axis::y;
    cfg.idler_axis = qpmkit::Axis::z;
    cfg.crystal_length_m = length_m;
    return cfg;
}

// Independent evaluation of the normalized grating response
//   (1/L) * integral_0^L g(z) e^{-i dk z} dz,  L = N * period,
// summing the exact antiderivative of e^{-i dk z} over every up and down
// domain separately. No Dirichlet-kernel algebra, no shared kernels.
inline std::complex<double> grating_response_oracle(const qpmkit::PolingProfile& p,
                                                    double dk) {
    const std::complex<double> i_unit(0.0, 1.0);
    auto segment = [&](double a, double b) {
        // integral_a^b e^{-i dk z} dz
        return (std::exp(-i_unit * dk * b) - std::exp(-i_unit * dk * a)) /
               (-i_unit * dk);
    };
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < p.duty.size(); ++j) {
        const double z0 = static_cast<double>(j) * p.period_m;
        const double zm = z0 + p.duty[j] * p.period_m;
        const double z1 = z0 + p.period_m;
        acc += segment(z0, zm) - segment(zm, z1);
    }
    return acc / p.poled_length_m();
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

struct CliResult {
    int exit_code = -1;
    std::string output;
};

inline CliResult run_cli(const std::string& args) {
    CliResult res;
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot start " + cmd);
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    const int status = ::pclose(pipe);
    if (status >= 0 && WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    return res;
}

inline std::string read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string bytes;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) bytes.append(buf, n);
    std::fclose(f);
    return bytes;
}

} // namespace testkit
