#include "qpmkit/jsa.hpp"
#include "qpmkit/errors.hpp"
#include "qpmkit/units.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qpmkit {

namespace {

std::vector<double> linspace(double center, double span, std::size_t count) {
    std::vector<double> out(count);
    const double lo = center - 0.5 * span;
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo + span * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

} // namespace

FrequencyGrid make_grid(double center_s, double span_s, std::size_t count_s,
                        double center_i, double span_i, std::size_t count_i) {
    if (count_s < 16 || count_i < 16)
        throw config_error("frequency grid needs at least 16 samples per axis");
    if (!(span_s > 0.0) || !(span_i > 0.0))
        throw config_error("frequency grid spans must be positive");
    if (!(center_s > 0.5 * span_s) || !(center_i > 0.5 * span_i))
        throw config_error("frequency grid extends to non-positive frequencies");
    FrequencyGrid g;
    g.omega_s = linspace(center_s, span_s, count_s);
    g.omega_i = linspace(center_i, span_i, count_i);
    return g;
}

double PumpSpectrum::amplitude(double omega_p) const {
    if (kind == Kind::gaussian) {
        const double d = omega_p - omega_center;
        return std::exp(-d * d / (sigma * sigma));
    }
    if (tab_omega.empty() || omega_p < tab_omega.front() || omega_p > tab_omega.back())
        return 0.0;
    const auto it = std::upper_bound(tab_omega.begin(), tab_omega.end(), omega_p);
    if (it == tab_omega.begin()) return tab_amplitude.front();
    const auto hi = static_cast<std::size_t>(it - tab_omega.begin());
    if (hi == tab_omega.size()) return tab_amplitude.back();
    const std::size_t lo = hi - 1;
    const double t = (omega_p - tab_omega[lo]) / (tab_omega[hi] - tab_omega[lo]);
    return tab_amplitude[lo] + t * (tab_amplitude[hi] - tab_amplitude[lo]);
}

PumpSpectrum PumpSpectrum::gaussian_pump(double omega_center, double sigma) {
    if (!(omega_center > 0.0)) throw config_error("pump center frequency must be positive");
    if (!(sigma > 0.0)) throw config_error("pump width must be positive");
    PumpSpectrum p;
    p.kind = Kind::gaussian;
    p.omega_center = omega_center;
    p.sigma = sigma;
    return p;
}

PumpSpectrum PumpSpectrum::from_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open pump table: " + path);
    PumpSpectrum p;
    p.kind = Kind::tabulated;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (row == 1 && line.find_first_not_of("0123456789.,+-eE \t") != std::string::npos)
            continue; // header
        std::istringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) {
            std::ostringstream os;
            os << "pump table row " << row << ": expected omega,amplitude";
            throw io_error(os.str());
        }
        try {
            p.tab_omega.push_back(std::stod(a));
            p.tab_amplitude.push_back(std::stod(b));
        } catch (const std::exception&) {
            std::ostringstream os;
            os << "pump table row " << row << ": not numeric";
            throw io_error(os.str());
        }
    }
    if (p.tab_omega.size() < 2) throw config_error("pump table needs at least two rows");
    if (!std::is_sorted(p.tab_omega.begin(), p.tab_omega.end()))
        throw config_error("pump table frequencies must ascend");
    return p;
}

Eigen::MatrixXd delta_k_grid(const FrequencyGrid& grid, const InteractionConfig& cfg,
                             const DispersionModel& model) {
    const auto ns = static_cast<Eigen::Index>(grid.omega_s.size());
    const auto ni = static_cast<Eigen::Index>(grid.omega_i.size());
    std::vector<double> ks(grid.omega_s.size()), ki(grid.omega_i.size());
    for (std::size_t a = 0; a < grid.omega_s.size(); ++a)
        ks[a] = model.wavevector(grid.omega_s[a], cfg.signal_axis);
    for (std::size_t b = 0; b < grid.omega_i.size(); ++b)
        ki[b] = model.wavevector(grid.omega_i[b], cfg.idler_axis);
    Eigen::MatrixXd dk(ns, ni);
    for (Eigen::Index b = 0; b < ni; ++b) {
        const double wi = grid.omega_i[static_cast<std::size_t>(b)];
        for (Eigen::Index a = 0; a < ns; ++a) {
            const double ws = grid.omega_s[static_cast<std::size_t>(a)];
            const double kp = model.wavevector(ws + wi, cfg.pump_axis);
            dk(a, b) = kp - (ks[static_cast<std::size_t>(a)] + ki[static_cast<std::size_t>(b)]);
        }
    }
    return dk;
}

Eigen::MatrixXcd phase_matching_grid(const PolingProfile& p, const FrequencyGrid& grid,
                                     const InteractionConfig& cfg,
                                     const DispersionModel& model) {
    const Eigen::MatrixXd dk = delta_k_grid(grid, cfg, model);
    Eigen::MatrixXcd G(dk.rows(), dk.cols());
    phase_matching_batch(p, dk.data(), static_cast<std::size_t>(dk.size()), G.data());
    return G;
}

Jsa compute_jsa(const Eigen::MatrixXcd& G, const PumpSpectrum& pump,
                const FrequencyGrid& grid) {
    const auto ns = static_cast<Eigen::Index>(grid.omega_s.size());
    const auto ni = static_cast<Eigen::Index>(grid.omega_i.size());
    if (G.rows() != ns || G.cols() != ni)
        throw config_error("phase-matching grid does not match the frequency grid");
    Jsa jsa;
    jsa.grid = grid;
    jsa.f.resize(ns, ni);
    for (Eigen::Index b = 0; b < ni; ++b) {
        const double wi = grid.omega_i[static_cast<std::size_t>(b)];
        for (Eigen::Index a = 0; a < ns; ++a) {
            const double ws = grid.omega_s[static_cast<std::size_t>(a)];
            jsa.f(a, b) = pump.amplitude(ws + wi) * G(a, b);
        }
    }
    return jsa;
}

Jsa compute_jsa(const PolingProfile& p, const PumpSpectrum& pump,
                const FrequencyGrid& grid, const InteractionConfig& cfg,
                const DispersionModel& model) {
    return compute_jsa(phase_matching_grid(p, grid, cfg, model), pump, grid);
}

double SpectralFilter::amplitude(double omega, double center_nm) const {
    if (!(bandwidth_nm > 0.0)) throw config_error("filter bandwidth must be positive");
    if (shape == Shape::rectangular) {
        // Closed passband given by exact wavelength edges.
        const double w_hi = omega_from_nm(center_nm - 0.5 * bandwidth_nm);
        const double w_lo = omega_from_nm(center_nm + 0.5 * bandwidth_nm);
        return (omega >= w_lo && omega <= w_hi) ? 1.0 : 0.0;
    }
    const double bw_omega = bandwidth_nm_to_omega(bandwidth_nm, center_nm);
    const double d = omega - omega_from_nm(center_nm);
    // Amplitude whose intensity profile has FWHM = bandwidth.
    return std::exp(-2.0 * std::log(2.0) * d * d / (bw_omega * bw_omega));
}

SpectralFilter parse_filter(const std::string& shape, double bandwidth_nm) {
    SpectralFilter f;
    if (shape == "rect" || shape == "rectangular")
        f.shape = SpectralFilter::Shape::rectangular;
    else if (shape == "gauss" || shape == "gaussian")
        f.shape = SpectralFilter::Shape::gaussian;
    else
        throw config_error("unknown filter shape '" + shape +
                           "' (expected rectangular or gaussian)");
    if (!(bandwidth_nm > 0.0)) throw config_error("filter bandwidth must be positive");
    f.bandwidth_nm = bandwidth_nm;
    return f;
}

std::string filter_shape_name(SpectralFilter::Shape s) {
    return s == SpectralFilter::Shape::rectangular ? "rectangular" : "gaussian";
}

Jsa apply_filter(const Jsa& jsa, const SpectralFilter& filter, double center_s_nm,
                 double center_i_nm) {
    Jsa out;
    out.grid = jsa.grid;
    const auto ns = jsa.f.rows();
    const auto ni = jsa.f.cols();
    Eigen::VectorXd fs(ns), fi(ni);
    for (Eigen::Index a = 0; a < ns; ++a)
        fs(a) = filter.amplitude(jsa.grid.omega_s[static_cast<std::size_t>(a)], center_s_nm);
    for (Eigen::Index b = 0; b < ni; ++b)
        fi(b) = filter.amplitude(jsa.grid.omega_i[static_cast<std::size_t>(b)], center_i_nm);
    out.f = fs.asDiagonal() * jsa.f * fi.asDiagonal();
    if (out.f.cwiseAbs().maxCoeff() == 0.0)
        throw numeric_error("filter leaves no amplitude inside the grid");
    return out;
}

std::vector<double> schmidt_weights(const Eigen::MatrixXcd& f) {
    // Drop rows/columns that are exactly zero (rectangular filters produce
    // many); the Gram matrix of the smaller side carries the same spectrum.
    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index a = 0; a < f.rows(); ++a)
        if (f.row(a).squaredNorm() > 0.0) rows.push_back(a);
    for (Eigen::Index b = 0; b < f.cols(); ++b)
        if (f.col(b).squaredNorm() > 0.0) cols.push_back(b);
    if (rows.empty() || cols.empty())
        throw numeric_error("cannot decompose an identically zero amplitude");

    Eigen::MatrixXcd sub(rows.size(), cols.size());
    for (std::size_t bb = 0; bb < cols.size(); ++bb)
        for (std::size_t aa = 0; aa < rows.size(); ++aa)
            sub(static_cast<Eigen::Index>(aa), static_cast<Eigen::Index>(bb)) =
                f(rows[aa], cols[bb]);

    Eigen::MatrixXcd gram;
    if (sub.rows() <= sub.cols())
        gram = sub * sub.adjoint();
    else
        gram = sub.adjoint() * sub;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numeric_error("eigendecomposition of the Gram matrix failed");

    Eigen::VectorXd ev = es.eigenvalues();
    std::vector<double> lam(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        lam[static_cast<std::size_t>(i)] = std::max(ev(i), 0.0);
    std::sort(lam.begin(), lam.end(), std::greater<>());
    double total = 0.0;
    for (const double l : lam) total += l;
    if (!(total > 0.0)) throw numeric_error("amplitude has zero norm");
    for (double& l : lam) l /= total;
    return lam;
}

double purity(const Eigen::MatrixXcd& f) {
    double acc = 0.0;
    for (const double l : schmidt_weights(f)) acc += l * l;
    return acc;
}

std::vector<double> schmidt_coefficients(const Eigen::MatrixXcd& f, std::size_t count) {
    const std::vector<double> lam = schmidt_weights(f);
    std::vector<double> xi;
    xi.reserve(std::min(count, lam.size()));
    for (std::size_t i = 0; i < lam.size() && i < count; ++i)
        xi.push_back(std::sqrt(lam[i]));
    return xi;
}

namespace {

struct MarginalData {
    std::vector<double> val;
    std::size_t argmax = 0;
};

MarginalData intensity_marginal(const Jsa& jsa, bool along_signal) {
    MarginalData m;
    if (along_signal) {
        m.val.resize(static_cast<std::size_t>(jsa.f.rows()));
        for (Eigen::Index a = 0; a < jsa.f.rows(); ++a)
            m.val[static_cast<std::size_t>(a)] = jsa.f.row(a).squaredNorm();
    } else {
        m.val.resize(static_cast<std::size_t>(jsa.f.cols()));
        for (Eigen::Index b = 0; b < jsa.f.cols(); ++b)
            m.val[static_cast<std::size_t>(b)] = jsa.f.col(b).squaredNorm();
    }
    m.argmax = static_cast<std::size_t>(
        std::max_element(m.val.begin(), m.val.end()) - m.val.begin());
    return m;
}

double refined_peak(const MarginalData& m, const std::vector<double>& axis,
                    const char* which) {
    const std::size_t k = m.argmax;
    if (k == 0 || k + 1 >= m.val.size()) {
        std::ostringstream os;
        os << which << " marginal peaks on the grid boundary; widen the grid";
        throw numeric_error(os.str());
    }
    const double y0 = m.val[k - 1], y1 = m.val[k], y2 = m.val[k + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double d = 0.0;
    if (denom < 0.0) d = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
    const double step = axis[1] - axis[0];
    return axis[k] + d * step;
}

double fitted_sigma(const MarginalData& m, const std::vector<double>& axis) {
    const double peak = *std::max_element(m.val.begin(), m.val.end());
    if (!(peak > 0.0)) throw numeric_error("marginal is identically zero");
    const double span = axis.back() - axis.front();
    const double x0 = axis[m.argmax];

    // Weighted quadratic fit of log intensity over the bright samples.
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, b0 = 0, b1 = 0, b2 = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < m.val.size(); ++i) {
        const double y = m.val[i];
        if (y <= 1e-3 * peak) continue;
        const double x = (axis[i] - x0) / span;
        const double ly = std::log(y / peak);
        const double w = y / peak;
        const double x2 = x * x;
        s0 += w;
        s1 += w * x;
        s2 += w * x2;
        s3 += w * x2 * x;
        s4 += w * x2 * x2;
        b0 += w * ly;
        b1 += w * x * ly;
        b2 += w * x2 * ly;
        ++used;
    }
    if (used >= 5) {
        Eigen::Matrix3d A;
        A << s0, s1, s2, s1, s2, s3, s2, s3, s4;
        const Eigen::Vector3d rhs(b0, b1, b2);
        const Eigen::Vector3d sol = A.fullPivLu().solve(rhs);
        const double c = sol(2);
        if (c < 0.0) return span * std::sqrt(-0.5 / c);
    }
    // Fallback: intensity-weighted standard deviation.
    double wsum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < m.val.size(); ++i) {
        wsum += m.val[i];
        mean += m.val[i] * axis[i];
    }
    mean /= wsum;
    double var = 0.0;
    for (std::size_t i = 0; i < m.val.size(); ++i) {
        const double d = axis[i] - mean;
        var += m.val[i] * d * d;
    }
    return std::sqrt(var / wsum);
}

} // namespace

MarginalPeaks marginal_peaks(const Jsa& jsa) {
    const MarginalData ms = intensity_marginal(jsa, true);
    const MarginalData mi = intensity_marginal(jsa, false);
    MarginalPeaks pk;
    pk.omega_s = refined_peak(ms, jsa.grid.omega_s, "signal");
    pk.omega_i = refined_peak(mi, jsa.grid.omega_i, "idler");
    return pk;
}

MarginalSigmas fit_marginal_sigmas(const Jsa& jsa) {
    const MarginalData ms = intensity_marginal(jsa, true);
    const MarginalData mi = intensity_marginal(jsa, false);
    MarginalSigmas s;
    s.sigma_s = fitted_sigma(ms, jsa.grid.omega_s);
    s.sigma_i = fitted_sigma(mi, jsa.grid.omega_i);
    return s;
}

void write_intensity_csv(const Jsa& jsa, const std::string& path, bool log_scale) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write intensity table: " + path);
    const auto ns = jsa.f.rows();
    const auto ni = jsa.f.cols();
    const double mx = jsa.f.cwiseAbs2().maxCoeff();
    if (!(mx > 0.0)) throw numeric_error("amplitude is identically zero");

    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9e", v);
        out << buf;
    };
    // Wavelength axes ascend in nm, so frequency indices run backwards.
    out << "signal_nm\\idler_nm";
    for (Eigen::Index b = ni; b-- > 0;) {
        out << ',';
        put(nm_from_omega(jsa.grid.omega_i[static_cast<std::size_t>(b)]));
    }
    out << '\n';
    for (Eigen::Index a = ns; a-- > 0;) {
        put(nm_from_omega(jsa.grid.omega_s[static_cast<std::size_t>(a)]));
        for (Eigen::Index b = ni; b-- > 0;) {
            const double v = std::norm(jsa.f(a, b)) / mx;
            out << ',';
            put(log_scale ? std::max(v > 0.0 ? std::log10(v) : -12.0, -12.0) : v);
        }
        out << '\n';
    }
    if (!out) throw io_error("failed writing intensity table: " + path);
}

} // namespace qpmkit
