#include "qpmkit/poling.hpp"
#include "qpmkit/errors.hpp"
#include "qpmkit/kernels.hpp"
#include "qpmkit/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qpmkit {

namespace {

constexpr double duty_tol = 1e-12;
constexpr double dk_zero_threshold = 1e-6; // rad/m

std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void PolingProfile::validate() const {
    if (!(period_m > 0.0)) throw config_error("poling period must be positive");
    if (!(crystal_length_m > 0.0)) throw config_error("crystal length must be positive");
    if (min_feature_m < 0.0) throw config_error("minimum feature size cannot be negative");
    if (!(min_feature_m < 0.5 * period_m))
        throw config_error("minimum feature size must be below half the period");
    if (duty.empty()) throw config_error("poling profile needs at least one period");
    if (poled_length_m() > crystal_length_m + period_m)
        throw config_error("poled region exceeds the crystal by more than one period");
    const double lo = duty_lo() - duty_tol;
    const double hi = duty_hi() + duty_tol;
    for (std::size_t j = 0; j < duty.size(); ++j) {
        const double a = duty[j];
        if (!std::isfinite(a) || a < -duty_tol || a > 1.0 + duty_tol || a < lo || a > hi) {
            std::ostringstream os;
            os << "duty cycle at period " << j << " is " << a
               << ", outside the admissible range [" << duty_lo() << ", " << duty_hi() << "]";
            throw config_error(os.str());
        }
    }
}

PolingProfile make_profile(double period_m, double crystal_length_m,
                           double min_feature_m, std::vector<double> duty) {
    PolingProfile p;
    p.period_m = period_m;
    p.crystal_length_m = crystal_length_m;
    p.min_feature_m = min_feature_m;
    p.duty = std::move(duty);
    p.validate();
    return p;
}

PolingProfile periodic_profile(double period_m, double crystal_length_m,
                               double min_feature_m) {
    if (!(period_m > 0.0)) throw config_error("poling period must be positive");
    const auto n = static_cast<std::size_t>(std::floor(crystal_length_m / period_m));
    if (n < 1) throw config_error("crystal is shorter than one poling period");
    return make_profile(period_m, crystal_length_m, min_feature_m,
                        std::vector<double>(n, 0.5));
}

PolingProfile gaussian_init(double period_m, double crystal_length_m,
                            double min_feature_m, double envelope_width_m) {
    if (!(period_m > 0.0)) throw config_error("poling period must be positive");
    if (!(envelope_width_m > 0.0)) throw config_error("envelope width must be positive");
    const auto n = static_cast<std::size_t>(std::floor(crystal_length_m / period_m));
    if (n < 1) throw config_error("crystal is shorter than one poling period");
    const double center = 0.5 * static_cast<double>(n) * period_m;
    std::vector<double> duty(n);
    const double lo = min_feature_m / period_m;
    const double hi = 1.0 - lo;
    for (std::size_t j = 0; j < n; ++j) {
        const double z = (static_cast<double>(j) + 0.5) * period_m;
        const double dz = z - center;
        const double env =
            std::exp(-dz * dz / (2.0 * envelope_width_m * envelope_width_m));
        const double a = std::asin(std::clamp(env, 0.0, 1.0)) / pi;
        duty[j] = std::clamp(a, lo, hi);
    }
    return make_profile(period_m, crystal_length_m, min_feature_m, std::move(duty));
}

PolingProfile with_period(const PolingProfile& p, double new_period_m) {
    PolingProfile q = p;
    q.period_m = new_period_m;
    q.validate();
    return q;
}

int g_profile(const PolingProfile& p, double z_m) {
    if (z_m < 0.0 || z_m > p.crystal_length_m)
        throw config_error("position is outside the crystal");
    const double poled = p.poled_length_m();
    if (z_m >= poled) return -1; // unpoled remainder
    auto j = static_cast<std::size_t>(z_m / p.period_m);
    if (j >= p.duty.size()) j = p.duty.size() - 1; // z == poled edge via rounding
    const double frac = z_m - static_cast<double>(j) * p.period_m;
    return frac < p.duty[j] * p.period_m ? 1 : -1;
}

namespace {

// Sum over e^{-i phi j}, j = 0..n-1, via the Dirichlet kernel. phi is first
// reduced mod 2pi; integer j makes the reduction exact, which keeps the
// expression stable at the quasi-phase-matching resonance phi = 2 pi.
std::complex<double> geometric_sum(double phi, std::size_t n) {
    const double eps = std::remainder(phi, two_pi);
    const double nd = static_cast<double>(n);
    double ratio;
    if (std::abs(eps) < 1e-12) {
        ratio = nd;
    } else {
        ratio = std::sin(0.5 * nd * eps) / std::sin(0.5 * eps);
    }
    return std::polar(ratio, -0.5 * eps * (nd - 1.0));
}

struct ProfileScratch {
    std::vector<double> q;      // j + duty[j]
    std::vector<double> cos_b;  // per-term buffers for gradient evaluation
    std::vector<double> sin_b;
};

void fill_offsets(const PolingProfile& p, ProfileScratch& s) {
    const std::size_t n = p.duty.size();
    s.q.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        s.q[j] = static_cast<double>(j) + p.duty[j];
}

std::complex<double> mean_duty_limit(const PolingProfile& p) {
    double acc = 0.0;
    for (const double a : p.duty) acc += 2.0 * a - 1.0;
    return {acc / static_cast<double>(p.duty.size()), 0.0};
}

// Closed-form G(dk) given precomputed offsets q[j] = j + duty[j]:
//   G = [(1 + e^{-i phi}) S_geo - 2 S_A] / (i L dk),  phi = period * dk,
//   S_A = sum_j e^{-i phi (j + duty_j)}.
std::complex<double> eval_G(const PolingProfile& p, double dk, const ProfileScratch& s,
                            const double* term_c, const double* term_s) {
    const std::size_t n = p.duty.size();
    const double phi = p.period_m * dk;
    std::complex<double> sa;
    if (term_c) {
        double cs = 0.0, ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            cs += term_c[j];
            ss += term_s[j];
        }
        sa = {cs, ss};
    } else {
        const auto sums = kernels::sum_exp_scaled(-phi, s.q.data(), n);
        sa = {sums.cos_sum, sums.sin_sum};
    }
    const std::complex<double> edge = 1.0 + std::polar(1.0, -phi);
    const std::complex<double> bracket = edge * geometric_sum(phi, n) - 2.0 * sa;
    const double L = p.poled_length_m();
    // 1 / (i L dk) = -i / (L dk)
    return bracket * std::complex<double>(0.0, -1.0 / (L * dk));
}

} // namespace

std::complex<double> phase_matching(const PolingProfile& p, double dk_rad_m) {
    if (std::abs(dk_rad_m) < dk_zero_threshold) return mean_duty_limit(p);
    ProfileScratch s;
    fill_offsets(p, s);
    return eval_G(p, dk_rad_m, s, nullptr, nullptr);
}

void phase_matching_batch(const PolingProfile& p, const double* dk_rad_m,
                          std::size_t count, std::complex<double>* out) {
    ProfileScratch s;
    fill_offsets(p, s);
    const std::complex<double> limit = mean_duty_limit(p);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::abs(dk_rad_m[i]) < dk_zero_threshold
                     ? limit
                     : eval_G(p, dk_rad_m[i], s, nullptr, nullptr);
    }
}

namespace {

struct SliceEval {
    std::vector<double> absG;
    std::vector<std::complex<double>> G;
    std::size_t peak = 0;
    double peak_abs = 0.0;
};

SliceEval eval_slice(const std::vector<double>& omega_s, const PolingProfile& p,
                     double omega_pump, const InteractionConfig& cfg,
                     const DispersionModel& model, ProfileScratch& s,
                     std::vector<double>* all_c, std::vector<double>* all_s) {
    if (omega_s.empty()) throw config_error("slice needs at least one sample");
    fill_offsets(p, s);
    const std::size_t n = p.duty.size();
    const std::size_t L = omega_s.size();
    SliceEval ev;
    ev.G.resize(L);
    ev.absG.resize(L);
    if (all_c) {
        all_c->resize(L * n);
        all_s->resize(L * n);
    }
    for (std::size_t l = 0; l < L; ++l) {
        const double wi = omega_pump - omega_s[l];
        const double dk = delta_k(omega_s[l], wi, cfg, model);
        std::complex<double> G;
        if (std::abs(dk) < dk_zero_threshold) {
            G = mean_duty_limit(p);
            if (all_c) {
                // e^{-i*0*(j+a)} = 1 for every term
                std::fill_n(all_c->data() + l * n, n, 1.0);
                std::fill_n(all_s->data() + l * n, n, 0.0);
            }
        } else if (all_c) {
            double* tc = all_c->data() + l * n;
            double* ts = all_s->data() + l * n;
            kernels::sincos_scaled(-p.period_m * dk, s.q.data(), n, tc, ts);
            G = eval_G(p, dk, s, tc, ts);
        } else {
            G = eval_G(p, dk, s, nullptr, nullptr);
        }
        ev.G[l] = G;
        ev.absG[l] = std::abs(G);
        if (ev.absG[l] > ev.peak_abs) {
            ev.peak_abs = ev.absG[l];
            ev.peak = l;
        }
    }
    if (!(ev.peak_abs > 0.0))
        throw numeric_error("phase-matching slice is identically zero");
    return ev;
}

} // namespace

std::vector<double> h_slice(const std::vector<double>& omega_s_samples,
                            const PolingProfile& p, double omega_pump,
                            const InteractionConfig& cfg, const DispersionModel& model) {
    ProfileScratch s;
    const SliceEval ev = eval_slice(omega_s_samples, p, omega_pump, cfg, model, s,
                                    nullptr, nullptr);
    std::vector<double> H(ev.absG.size());
    for (std::size_t l = 0; l < H.size(); ++l) H[l] = ev.absG[l] / ev.peak_abs;
    return H;
}

SliceGradient h_slice_with_gradient(const std::vector<double>& omega_s_samples,
                                    const PolingProfile& p, double omega_pump,
                                    const InteractionConfig& cfg,
                                    const DispersionModel& model) {
    ProfileScratch s;
    std::vector<double> term_c, term_s;
    const SliceEval ev =
        eval_slice(omega_s_samples, p, omega_pump, cfg, model, s, &term_c, &term_s);
    const std::size_t L = omega_s_samples.size();
    const std::size_t n = p.duty.size();

    SliceGradient out;
    out.samples = L;
    out.periods = n;
    out.H.resize(L);
    out.dH.assign(L * n, 0.0);

    // d|G_l|/dduty_j = Re(conj(G_l) t_lj) * (2 period / L_poled) / |G_l|
    // with t_lj the l-th sample's j-th phase term. The dk -> 0 branch has
    // dG/dduty_j = 2/N and real G, handled by the same expression since its
    // stored terms are t = 1.
    const double gain = 2.0 * p.period_m / p.poled_length_m();
    const double M = ev.peak_abs;
    for (std::size_t l = 0; l < L; ++l) {
        out.H[l] = ev.absG[l] / M;
        double* row = out.dH.data() + l * n;
        if (ev.absG[l] == 0.0) continue; // subgradient at the modulus kink
        const double w = gain / ev.absG[l];
        const double gr = ev.G[l].real(), gi = ev.G[l].imag();
        const double* tc = term_c.data() + l * n;
        const double* ts = term_s.data() + l * n;
        for (std::size_t j = 0; j < n; ++j) row[j] = w * (gr * tc[j] + gi * ts[j]);
    }

    // Chain through the normalization H_l = |G_l| / |G_peak|: subtract the
    // peak row scaled by H_l; the peak row itself becomes exactly zero.
    const double* prow = out.dH.data() + ev.peak * n;
    for (std::size_t l = 0; l < L; ++l) {
        if (l == ev.peak) continue;
        double* row = out.dH.data() + l * n;
        const double hl = out.H[l];
        for (std::size_t j = 0; j < n; ++j) row[j] = (row[j] - hl * prow[j]) / M;
    }
    std::fill(out.dH.begin() + static_cast<std::ptrdiff_t>(ev.peak * n),
              out.dH.begin() + static_cast<std::ptrdiff_t>((ev.peak + 1) * n), 0.0);
    return out;
}

void export_poling_csv(const PolingProfile& p, const std::string& csv_path,
                       const std::string& dispersion_file_hash) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw io_error("cannot write poling file: " + csv_path);
    out << "index,z_start_m,duty_cycle,domain_up_length_m,domain_down_length_m\n";
    for (std::size_t j = 0; j < p.duty.size(); ++j) {
        const double z = static_cast<double>(j) * p.period_m;
        const double up = p.duty[j] * p.period_m;
        out << j << ',' << fmt_g17(z) << ',' << fmt_g17(p.duty[j]) << ',' << fmt_g17(up)
            << ',' << fmt_g17(p.period_m - up) << '\n';
    }
    if (!out) throw io_error("failed writing poling file: " + csv_path);
    out.close();

    nlohmann::json meta{{"period_m", p.period_m},
                        {"crystal_length_m", p.crystal_length_m},
                        {"min_feature_m", p.min_feature_m},
                        {"periods", p.duty.size()},
                        {"dispersion_file_hash", dispersion_file_hash}};
    std::ofstream ms(csv_path + ".meta.json", std::ios::binary);
    if (!ms) throw io_error("cannot write poling sidecar: " + csv_path + ".meta.json");
    ms << meta.dump(2) << '\n';
}

ImportedProfile import_poling_csv(const std::string& csv_path) {
    std::ifstream ms(csv_path + ".meta.json", std::ios::binary);
    if (!ms) throw io_error("missing poling sidecar: " + csv_path + ".meta.json");
    nlohmann::json meta;
    try {
        ms >> meta;
    } catch (const std::exception& e) {
        throw io_error("poling sidecar is not valid JSON: " + std::string(e.what()));
    }

    ImportedProfile res;
    PolingProfile p;
    std::size_t expected = 0;
    try {
        p.period_m = meta.at("period_m").get<double>();
        p.crystal_length_m = meta.at("crystal_length_m").get<double>();
        p.min_feature_m = meta.at("min_feature_m").get<double>();
        expected = meta.at("periods").get<std::size_t>();
        res.dispersion_file_hash = meta.at("dispersion_file_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error("poling sidecar has wrong schema: " + std::string(e.what()));
    }

    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw io_error("cannot open poling file: " + csv_path);
    std::string line;
    if (!std::getline(in, line))
        throw io_error("poling file is empty: " + csv_path);

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        double vals[5];
        for (int c = 0; c < 5; ++c) {
            if (!std::getline(ls, cell, ',')) {
                std::ostringstream os;
                os << "poling file row " << row << ": expected 5 columns";
                throw io_error(os.str());
            }
            try {
                vals[c] = std::stod(cell);
            } catch (const std::exception&) {
                std::ostringstream os;
                os << "poling file row " << row << ": '" << cell << "' is not a number";
                throw io_error(os.str());
            }
        }
        const auto j = static_cast<std::size_t>(vals[0]);
        if (j != p.duty.size()) {
            std::ostringstream os;
            os << "poling file row " << row << ": period index " << vals[0]
               << " out of order";
            throw io_error(os.str());
        }
        const double rel = std::abs(vals[3] + vals[4] - p.period_m);
        if (rel > 1e-9 * p.period_m) {
            std::ostringstream os;
            os << "poling file row " << row
               << ": domain lengths do not add up to the period";
            throw io_error(os.str());
        }
        if (std::abs(vals[3] - vals[2] * p.period_m) > 1e-9 * p.period_m) {
            std::ostringstream os;
            os << "poling file row " << row
               << ": up-domain length disagrees with the duty cycle";
            throw io_error(os.str());
        }
        p.duty.push_back(vals[2]);
    }
    if (p.duty.size() != expected) {
        std::ostringstream os;
        os << "poling file has " << p.duty.size() << " rows but the sidecar promises "
           << expected;
        throw io_error(os.str());
    }
    p.validate();
    res.profile = std::move(p);
    return res;
}

} // namespace qpmkit
