#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace qpmkit {

enum class Axis { x, y, z };

Axis axis_from_string(const std::string& s);
const char* axis_name(Axis a);

// Two-pole Sellmeier model for a biaxial crystal,
//   n^2 = A + B / (L^2 - C) + D / (L^2 - E),  L = vacuum wavelength in um,
// loaded from a JSON file with per-axis coefficient arrays and a validity
// window in nm. Queries outside the window throw config_error.
class DispersionModel {
public:
    static DispersionModel load(const std::string& path);

    double refractive_index(double wavelength_nm, Axis axis) const;

    // k = omega * n(lambda) / c for the given polarization axis.
    double wavevector(double omega_rad_s, Axis axis) const;

    const std::string& crystal_name() const { return crystal_name_; }
    const std::string& formula_id() const { return formula_id_; }
    double window_lo_nm() const { return window_lo_nm_; }
    double window_hi_nm() const { return window_hi_nm_; }

    // FNV-1a 64-bit hash of the source file bytes, echoed into run
    // artifacts so results can be traced to the coefficient set.
    const std::string& source_hash() const { return source_hash_; }
    const std::string& source_path() const { return source_path_; }

private:
    std::array<std::array<double, 5>, 3> coeffs_{};
    double window_lo_nm_ = 0.0;
    double window_hi_nm_ = 0.0;
    std::string crystal_name_;
    std::string formula_id_;
    std::string source_hash_;
    std::string source_path_;
};

// A collinear type-II interaction: pump at lambda_pump_nm decays into
// signal/idler on distinct polarization axes of a crystal of length
// crystal_length_m. Degenerate point is at twice the pump wavelength.
struct InteractionConfig {
    double lambda_pump_nm = 775.0;
    Axis pump_axis = Axis::y;
    Axis signal_axis = Axis::y;
    Axis idler_axis = Axis::z;
    double crystal_length_m = 10e-3;

    double omega_pump() const;
    double omega_degenerate() const;
    void validate() const; // throws config_error on bad values
};

// Collinear wavevector mismatch k_P(w_s + w_i) - (k_S(w_s) + k_I(w_i)).
double delta_k(double omega_s, double omega_i, const InteractionConfig& cfg,
               const DispersionModel& model);

struct GvmSlopes {
    double gamma_s; // d(delta_k)/d(omega_s) at the degenerate point, s/m
    double gamma_i; // -d(delta_k)/d(omega_i) at the degenerate point, s/m
};

// Central-difference group-velocity-mismatch slopes at the degenerate point.
GvmSlopes gvm_slopes(const InteractionConfig& cfg, const DispersionModel& model);

// Degenerate wavelength in [lo_nm, hi_nm] where gamma_s = gamma_i, found by
// bisection to 0.01 nm. Throws numeric_error when the bracket has no root.
double find_gvm_wavelength(const InteractionConfig& cfg, const DispersionModel& model,
                           double lo_nm = 1400.0, double hi_nm = 1700.0);

// First-order quasi-phase-matching period 2*pi/|delta_k| at degeneracy.
double nominal_period(const InteractionConfig& cfg, const DispersionModel& model);

// FNV-1a 64 bit over a byte string, hex encoded with a "fnv1a64:" prefix.
std::string fnv1a64_hex(const std::string& bytes);

} // namespace qpmkit
