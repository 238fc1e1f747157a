#include "qpmkit/dispersion.hpp"
#include "qpmkit/errors.hpp"
#include "qpmkit/units.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace qpmkit {

Axis axis_from_string(const std::string& s) {
    if (s == "x" || s == "X") return Axis::x;
    if (s == "y" || s == "Y") return Axis::y;
    if (s == "z" || s == "Z") return Axis::z;
    throw config_error("unknown polarization axis '" + s + "' (expected x, y or z)");
}

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        default: return "z";
    }
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << h;
    return os.str();
}

DispersionModel DispersionModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open dispersion file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const std::exception& e) {
        throw io_error("dispersion file " + path + " is not valid JSON: " + e.what());
    }

    DispersionModel m;
    try {
        m.crystal_name_ = j.at("crystal_name").get<std::string>();
        m.formula_id_ = j.at("formula_id").get<std::string>();
        const auto& axes = j.at("axes");
        const char* names[3] = {"x", "y", "z"};
        for (int a = 0; a < 3; ++a) {
            const auto& arr = axes.at(names[a]);
            if (arr.size() != 5)
                throw config_error(std::string("axis ") + names[a] +
                                   " must have 5 Sellmeier coefficients");
            for (int i = 0; i < 5; ++i) m.coeffs_[a][i] = arr.at(i).get<double>();
        }
        const auto& win = j.at("valid_window_nm");
        m.window_lo_nm_ = win.at(0).get<double>();
        m.window_hi_nm_ = win.at(1).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error("dispersion file " + path + " has wrong schema: " + e.what());
    }
    if (m.formula_id_ != "sellmeier_two_pole")
        throw config_error("unsupported dispersion formula_id '" + m.formula_id_ + "'");
    if (!(m.window_lo_nm_ > 0.0) || !(m.window_hi_nm_ > m.window_lo_nm_))
        throw config_error("dispersion validity window must satisfy 0 < lo < hi");
    m.source_hash_ = fnv1a64_hex(bytes);
    m.source_path_ = path;
    return m;
}

double DispersionModel::refractive_index(double wavelength_nm, Axis axis) const {
    if (!(wavelength_nm >= window_lo_nm_ && wavelength_nm <= window_hi_nm_)) {
        std::ostringstream os;
        os << "wavelength " << wavelength_nm << " nm outside dispersion validity window ["
           << window_lo_nm_ << ", " << window_hi_nm_ << "] nm";
        throw config_error(os.str());
    }
    const auto& c = coeffs_[static_cast<int>(axis)];
    const double lum = wavelength_nm * 1e-3;
    const double l2 = lum * lum;
    const double n2 = c[0] + c[1] / (l2 - c[2]) + c[3] / (l2 - c[4]);
    if (!(n2 > 0.0)) throw numeric_error("Sellmeier expression is non-positive");
    return std::sqrt(n2);
}

double DispersionModel::wavevector(double omega_rad_s, Axis axis) const {
    if (!(omega_rad_s > 0.0)) throw config_error("wavevector requires omega > 0");
    const double lambda_nm = nm_from_omega(omega_rad_s);
    return omega_rad_s * refractive_index(lambda_nm, axis) / c_light;
}

double InteractionConfig::omega_pump() const { return omega_from_nm(lambda_pump_nm); }

double InteractionConfig::omega_degenerate() const { return 0.5 * omega_pump(); }

void InteractionConfig::validate() const {
    if (!(lambda_pump_nm > 0.0)) throw config_error("pump wavelength must be positive");
    if (signal_axis == idler_axis)
        throw config_error("signal and idler axes must differ for a type-II interaction");
    if (!(crystal_length_m > 0.0)) throw config_error("crystal length must be positive");
}

double delta_k(double omega_s, double omega_i, const InteractionConfig& cfg,
               const DispersionModel& model) {
    const double kp = model.wavevector(omega_s + omega_i, cfg.pump_axis);
    const double ks = model.wavevector(omega_s, cfg.signal_axis);
    const double ki = model.wavevector(omega_i, cfg.idler_axis);
    return kp - (ks + ki);
}

GvmSlopes gvm_slopes(const InteractionConfig& cfg, const DispersionModel& model) {
    const double w0 = cfg.omega_degenerate();
    const double h = two_pi * 1e9; // 1 GHz step, scale-matched to the curvature
    GvmSlopes g;
    g.gamma_s = (delta_k(w0 + h, w0, cfg, model) - delta_k(w0 - h, w0, cfg, model)) / (2.0 * h);
    g.gamma_i = -(delta_k(w0, w0 + h, cfg, model) - delta_k(w0, w0 - h, cfg, model)) / (2.0 * h);
    return g;
}

double find_gvm_wavelength(const InteractionConfig& cfg, const DispersionModel& model,
                           double lo_nm, double hi_nm) {
    auto mismatch = [&](double degenerate_nm) {
        InteractionConfig c = cfg;
        c.lambda_pump_nm = 0.5 * degenerate_nm;
        const GvmSlopes g = gvm_slopes(c, model);
        return g.gamma_s - g.gamma_i;
    };
    double a = lo_nm, b = hi_nm;
    double fa = mismatch(a), fb = mismatch(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0)
        throw numeric_error("group-velocity slopes do not cross inside the search window");
    while (b - a > 0.01) {
        const double m = 0.5 * (a + b);
        const double fm = mismatch(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

double nominal_period(const InteractionConfig& cfg, const DispersionModel& model) {
    const double w0 = cfg.omega_degenerate();
    const double dk0 = delta_k(w0, w0, cfg, model);
    if (std::abs(dk0) < 1.0) // rad/m; a 6 km period is outside any real device
        throw numeric_error("interaction is phase matched without poling, no finite period");
    return two_pi / std::abs(dk0);
}

} // namespace qpmkit
