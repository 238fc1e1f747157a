#include <doctest.h>

#include "qpmkit/errors.hpp"
#include "qpmkit/jsa.hpp"
#include "qpmkit/units.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

using namespace qpmkit;
using testkit::config_for;
using testkit::model;
using testkit::rel_approx;

namespace {

Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols,
                                std::uint64_t seed) {
    auto gen = testkit::rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXcd f(rows, cols);
    for (Eigen::Index b = 0; b < cols; ++b)
        for (Eigen::Index a = 0; a < rows; ++a) f(a, b) = {u(gen), u(gen)};
    return f;
}

} // namespace

TEST_CASE("frequency grids are validated and sample the full span") {
    CHECK_THROWS_AS(make_grid(1e15, 1e13, 15, 1e15, 1e13, 32), config_error);
    CHECK_THROWS_AS(make_grid(1e15, 1e13, 32, 1e15, 1e13, 8), config_error);
    CHECK_THROWS_AS(make_grid(1e15, 0.0, 32, 1e15, 1e13, 32), config_error);
    CHECK_THROWS_AS(make_grid(5e12, 1e13, 32, 1e15, 1e13, 32), config_error);

    const FrequencyGrid g = make_grid(1.2e15, 2e13, 33, 1.3e15, 4e13, 17);
    CHECK(g.omega_s.size() == 33);
    CHECK(g.omega_i.size() == 17);
    CHECK(g.omega_s.front() == rel_approx(1.19e15, 1e-15));
    CHECK(g.omega_s.back() == rel_approx(1.21e15, 1e-15));
    CHECK(g.omega_i.front() == rel_approx(1.28e15, 1e-15));
    CHECK(g.omega_i.back() == rel_approx(1.32e15, 1e-15));
    CHECK(std::is_sorted(g.omega_s.begin(), g.omega_s.end()));
    CHECK(g.omega_s[16] == rel_approx(1.2e15, 1e-15));
}

TEST_CASE("gaussian pump amplitude follows exp(-d^2/sigma^2)") {
    CHECK_THROWS_AS(PumpSpectrum::gaussian_pump(0.0, 1e12), config_error);
    CHECK_THROWS_AS(PumpSpectrum::gaussian_pump(1e15, 0.0), config_error);
    const PumpSpectrum p = PumpSpectrum::gaussian_pump(2.43e15, 1.5e12);
    CHECK(p.amplitude(2.43e15) == 1.0);
    CHECK(p.amplitude(2.43e15 + 1.5e12) == rel_approx(std::exp(-1.0), 1e-14));
    CHECK(p.amplitude(2.43e15 - 3.0e12) == rel_approx(std::exp(-4.0), 1e-13));
}

TEST_CASE("tabulated pumps interpolate linearly and vanish outside the table") {
    const std::string path = testkit::scratch_path("pump_tab.csv");
    {
        std::ofstream out(path);
        out << "omega,amplitude\n1.0,0.0\n2.0,1.0\n4.0,0.0\n";
    }
    const PumpSpectrum p = PumpSpectrum::from_csv(path);
    CHECK(p.kind == PumpSpectrum::Kind::tabulated);
    CHECK(p.amplitude(1.5) == rel_approx(0.5, 1e-15));
    CHECK(p.amplitude(3.0) == rel_approx(0.5, 1e-15));
    CHECK(p.amplitude(2.0) == 1.0);
    CHECK(p.amplitude(0.5) == 0.0);
    CHECK(p.amplitude(4.5) == 0.0);
    CHECK(p.amplitude(1.0) == 0.0);
    CHECK(p.amplitude(4.0) == 0.0);

    const std::string unsorted = testkit::scratch_path("pump_unsorted.csv");
    {
        std::ofstream out(unsorted);
        out << "2.0,1.0\n1.0,0.5\n";
    }
    CHECK_THROWS_AS(PumpSpectrum::from_csv(unsorted), config_error);

    const std::string single = testkit::scratch_path("pump_single.csv");
    {
        std::ofstream out(single);
        out << "omega,amplitude\n2.0,1.0\n";
    }
    CHECK_THROWS_AS(PumpSpectrum::from_csv(single), config_error);

    const std::string garbled = testkit::scratch_path("pump_garbled.csv");
    {
        std::ofstream out(garbled);
        out << "1.0,0.0\n2.0,oops\n";
    }
    try {
        PumpSpectrum::from_csv(garbled);
        FAIL("expected an io_error");
    } catch (const io_error& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(PumpSpectrum::from_csv(testkit::scratch_path("absent.csv")),
                    io_error);
}

TEST_CASE("mismatch and phase-matching grids agree with pointwise evaluation") {
    const InteractionConfig cfg = config_for(1550.0);
    const auto& m = model();
    const double w0 = cfg.omega_degenerate();
    const FrequencyGrid g = make_grid(w0, 4e12, 16, w0, 6e12, 19);
    const PolingProfile p = periodic_profile(nominal_period(cfg, m), 10e-3, 0.0);

    const Eigen::MatrixXd dk = delta_k_grid(g, cfg, m);
    const Eigen::MatrixXcd G = phase_matching_grid(p, g, cfg, m);
    REQUIRE(dk.rows() == 16);
    REQUIRE(dk.cols() == 19);
    for (Eigen::Index b = 0; b < dk.cols(); ++b) {
        for (Eigen::Index a = 0; a < dk.rows(); ++a) {
            const double ws = g.omega_s[static_cast<std::size_t>(a)];
            const double wi = g.omega_i[static_cast<std::size_t>(b)];
            CHECK(dk(a, b) == delta_k(ws, wi, cfg, m));
            CHECK(G(a, b) == phase_matching(p, dk(a, b)));
        }
    }
}

TEST_CASE("the joint amplitude is the pump envelope times the grating response") {
    const InteractionConfig cfg = config_for(1550.0);
    const auto& m = model();
    const double w0 = cfg.omega_degenerate();
    const FrequencyGrid g = make_grid(w0, 4e12, 17, w0, 4e12, 16);
    const PolingProfile p = periodic_profile(nominal_period(cfg, m), 10e-3, 0.0);
    const PumpSpectrum pump = PumpSpectrum::gaussian_pump(cfg.omega_pump(), 1.2e12);

    const Eigen::MatrixXcd G = phase_matching_grid(p, g, cfg, m);
    const Jsa jsa = compute_jsa(p, pump, g, cfg, m);
    REQUIRE(jsa.f.rows() == 17);
    REQUIRE(jsa.f.cols() == 16);
    for (Eigen::Index b = 0; b < 16; ++b) {
        for (Eigen::Index a = 0; a < 17; ++a) {
            const double ws = g.omega_s[static_cast<std::size_t>(a)];
            const double wi = g.omega_i[static_cast<std::size_t>(b)];
            CHECK(jsa.f(a, b) == pump.amplitude(ws + wi) * G(a, b));
        }
    }

    const FrequencyGrid other = make_grid(w0, 4e12, 16, w0, 4e12, 16);
    CHECK_THROWS_AS(compute_jsa(G, pump, other), config_error);
}

TEST_CASE("rectangular filters pass a closed wavelength band") {
    const SpectralFilter f = parse_filter("rect", 8.0);
    CHECK(f.shape == SpectralFilter::Shape::rectangular);
    const double c = 1550.0;
    CHECK(f.amplitude(omega_from_nm(c), c) == 1.0);
    CHECK(f.amplitude(omega_from_nm(c - 4.0), c) == 1.0); // blue edge inclusive
    CHECK(f.amplitude(omega_from_nm(c + 4.0), c) == 1.0); // red edge inclusive
    CHECK(f.amplitude(omega_from_nm(c - 4.0) * (1.0 + 1e-12), c) == 0.0);
    CHECK(f.amplitude(omega_from_nm(c + 4.0) * (1.0 - 1e-12), c) == 0.0);
    CHECK(f.amplitude(omega_from_nm(c - 5.0), c) == 0.0);
    CHECK(f.amplitude(omega_from_nm(c + 5.0), c) == 0.0);
}

TEST_CASE("gaussian filters have the stated intensity FWHM") {
    const SpectralFilter f = parse_filter("gaussian", 8.0);
    const double c = 1550.0;
    const double w0 = omega_from_nm(c);
    const double bw = bandwidth_nm_to_omega(8.0, c);
    CHECK(f.amplitude(w0, c) == 1.0);
    const double half = f.amplitude(w0 + 0.5 * bw, c);
    CHECK(half * half == rel_approx(0.5, 1e-12));
    const double down = f.amplitude(w0 - 0.5 * bw, c);
    CHECK(down * down == rel_approx(0.5, 1e-12));

    CHECK_THROWS_AS(parse_filter("box", 8.0), config_error);
    CHECK_THROWS_AS(parse_filter("rect", 0.0), config_error);
    CHECK(filter_shape_name(SpectralFilter::Shape::rectangular) == "rectangular");
    CHECK(filter_shape_name(SpectralFilter::Shape::gaussian) == "gaussian");
}

TEST_CASE("filtering multiplies rows and columns by the per-arm transmission") {
    const double c_s = 1549.2, c_i = 1551.1;
    const double w0 = omega_from_nm(1550.0);
    FrequencyGrid g = make_grid(w0, 0.02 * w0, 24, w0, 0.02 * w0, 21);
    Jsa jsa;
    jsa.grid = g;
    jsa.f = random_complex(24, 21, 7);

    const SpectralFilter filt = parse_filter("gauss", 12.0);
    const Jsa out = apply_filter(jsa, filt, c_s, c_i);
    for (Eigen::Index b = 0; b < 21; ++b) {
        for (Eigen::Index a = 0; a < 24; ++a) {
            const double fs = filt.amplitude(g.omega_s[static_cast<std::size_t>(a)], c_s);
            const double fi = filt.amplitude(g.omega_i[static_cast<std::size_t>(b)], c_i);
            const std::complex<double> want = fs * jsa.f(a, b) * fi;
            CHECK(std::abs(out.f(a, b) - want) <= 1e-15 * std::abs(want));
        }
    }

    // A rectangular passband far outside the grid removes everything.
    const SpectralFilter offgrid = parse_filter("rect", 1.0);
    CHECK_THROWS_AS(apply_filter(jsa, offgrid, 1400.0, 1400.0), numeric_error);
}

TEST_CASE("schmidt weights descend, sum to one and detect rank") {
    const Eigen::MatrixXcd f = random_complex(14, 23, 99);
    const std::vector<double> lam = schmidt_weights(f);
    CHECK(lam.size() == 14);
    CHECK(std::is_sorted(lam.begin(), lam.end(), std::greater<>()));
    CHECK(lam.back() >= 0.0);
    const double total = std::accumulate(lam.begin(), lam.end(), 0.0);
    CHECK(total == rel_approx(1.0, 1e-12));

    // Rank-1 outer product: all weight in the first mode.
    Eigen::VectorXcd u(9), v(13);
    auto gen = testkit::rng(2024);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (Eigen::Index i = 0; i < 9; ++i) u(i) = {val(gen), val(gen)};
    for (Eigen::Index i = 0; i < 13; ++i) v(i) = {val(gen), val(gen)};
    const Eigen::MatrixXcd outer = u * v.transpose();
    const std::vector<double> lo = schmidt_weights(outer);
    CHECK(lo[0] == rel_approx(1.0, 1e-12));
    CHECK(purity(outer) > 1.0 - 1e-10);
    CHECK(purity(outer) <= 1.0 + 1e-12);

    Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(8, 8);
    CHECK_THROWS_AS(schmidt_weights(zero), numeric_error);
}

TEST_CASE("purity has closed-form values on small matrices") {
    Eigen::MatrixXcd two = Eigen::MatrixXcd::Zero(2, 2);
    two(0, 0) = 1.0 / std::sqrt(2.0);
    two(1, 1) = 1.0 / std::sqrt(2.0);
    CHECK(purity(two) == 0.5); // exactly two equal modes

    Eigen::MatrixXcd shear = Eigen::MatrixXcd::Zero(2, 2);
    shear(0, 0) = 1.0;
    shear(0, 1) = 1.0;
    shear(1, 1) = 1.0;
    CHECK(purity(shear) == rel_approx(7.0 / 9.0, 1e-12));
    const std::vector<double> lam = schmidt_weights(shear);
    CHECK(lam[0] == rel_approx((3.0 + std::sqrt(5.0)) / 6.0, 1e-12));
    CHECK(lam[1] == rel_approx((3.0 - std::sqrt(5.0)) / 6.0, 1e-12));

    const std::vector<double> xi = schmidt_coefficients(shear, 8);
    CHECK(xi.size() == 2);
    CHECK(xi[0] == rel_approx(std::sqrt((3.0 + std::sqrt(5.0)) / 6.0), 1e-12));
}

TEST_CASE("purity is invariant under power-of-two scaling and transposition") {
    const Eigen::MatrixXcd f = random_complex(12, 20, 5150);
    const double base = purity(f);
    CHECK(purity(4.0 * f) == base);
    CHECK(purity(0.25 * f) == base);

    // Real-valued rectangular amplitude: both orientations build bitwise the
    // same Gram matrix, so the purity is identical down to the last bit.
    Eigen::MatrixXcd realf = random_complex(12, 20, 61);
    realf.imag().setZero();
    CHECK(purity(realf.transpose()) == purity(realf));

    // Complex case: same spectrum up to numerical roundoff.
    const double t = purity(f.transpose());
    CHECK(t == rel_approx(base, 1e-10));
}

TEST_CASE("marginal peaks are refined between grid points") {
    const double w0 = omega_from_nm(1550.0);
    const FrequencyGrid g = make_grid(w0, 8e12, 41, w0, 8e12, 43);
    const double step_s = g.omega_s[1] - g.omega_s[0];
    const double step_i = g.omega_i[1] - g.omega_i[0];
    const double cs = w0 + 0.3 * step_s;
    const double ci = w0 - 0.4 * step_i;
    const double ss = 6.0 * step_s, si = 5.0 * step_i;

    Jsa jsa;
    jsa.grid = g;
    jsa.f.resize(41, 43);
    for (Eigen::Index b = 0; b < 43; ++b) {
        for (Eigen::Index a = 0; a < 41; ++a) {
            const double ds = (g.omega_s[static_cast<std::size_t>(a)] - cs) / ss;
            const double di = (g.omega_i[static_cast<std::size_t>(b)] - ci) / si;
            jsa.f(a, b) = std::exp(-0.5 * ds * ds) * std::exp(-0.5 * di * di);
        }
    }
    const MarginalPeaks pk = marginal_peaks(jsa);
    CHECK(std::abs(pk.omega_s - cs) < 0.1 * step_s);
    CHECK(std::abs(pk.omega_i - ci) < 0.1 * step_i);

    // A marginal that is exactly symmetric about a grid point is returned
    // without any sub-sample shift.
    Jsa centered;
    centered.grid = g;
    centered.f.resize(41, 43);
    for (Eigen::Index b = 0; b < 43; ++b) {
        for (Eigen::Index a = 0; a < 41; ++a) {
            const double ds = static_cast<double>(a - 20) / 6.0;
            const double di = static_cast<double>(b - 21) / 5.0;
            centered.f(a, b) = std::exp(-0.5 * (ds * ds + di * di));
        }
    }
    const MarginalPeaks pc = marginal_peaks(centered);
    CHECK(pc.omega_s == g.omega_s[20]);
    CHECK(pc.omega_i == g.omega_i[21]);

    // A marginal that peaks on the boundary is an error, not a wrong answer.
    Jsa edge;
    edge.grid = g;
    edge.f.resize(41, 43);
    for (Eigen::Index b = 0; b < 43; ++b)
        for (Eigen::Index a = 0; a < 41; ++a)
            edge.f(a, b) = std::exp(0.02 * static_cast<double>(a)) *
                           std::exp(-0.1 * std::abs(static_cast<double>(b) - 21.0));
    CHECK_THROWS_AS(marginal_peaks(edge), numeric_error);
}

TEST_CASE("marginal widths recover the gaussian sigma") {
    const double w0 = omega_from_nm(1550.0);
    const FrequencyGrid g = make_grid(w0, 1.2e13, 61, w0, 1.2e13, 59);
    const double sig_amp_s = 1.1e12, sig_amp_i = 0.8e12;

    Jsa jsa;
    jsa.grid = g;
    jsa.f.resize(61, 59);
    for (Eigen::Index b = 0; b < 59; ++b) {
        for (Eigen::Index a = 0; a < 61; ++a) {
            const double ds = (g.omega_s[static_cast<std::size_t>(a)] - w0) / sig_amp_s;
            const double di = (g.omega_i[static_cast<std::size_t>(b)] - w0) / sig_amp_i;
            jsa.f(a, b) = std::exp(-0.5 * (ds * ds + di * di));
        }
    }
    const MarginalSigmas s = fit_marginal_sigmas(jsa);
    // Intensity marginals are sqrt(2) narrower than the amplitude widths.
    CHECK(s.sigma_s == rel_approx(sig_amp_s / std::sqrt(2.0), 1e-4));
    CHECK(s.sigma_i == rel_approx(sig_amp_i / std::sqrt(2.0), 1e-4));

    // A flat amplitude has no concave log fit; the second-moment fallback
    // reports the spread of a uniform distribution.
    Jsa flat;
    flat.grid = g;
    flat.f = Eigen::MatrixXcd::Ones(61, 59);
    const MarginalSigmas u = fit_marginal_sigmas(flat);
    const double span = g.omega_s.back() - g.omega_s.front();
    CHECK(u.sigma_s == rel_approx(span / std::sqrt(12.0), 0.05));
}

TEST_CASE("intensity tables are normalized, wavelength ordered and loggable") {
    const double w0 = omega_from_nm(1550.0);
    const FrequencyGrid g = make_grid(w0, 6e12, 16, w0, 6e12, 17);
    Jsa jsa;
    jsa.grid = g;
    jsa.f.resize(16, 17);
    for (Eigen::Index b = 0; b < 17; ++b) {
        for (Eigen::Index a = 0; a < 16; ++a) {
            const double ds = (g.omega_s[static_cast<std::size_t>(a)] - w0) / 2e12;
            const double di = (g.omega_i[static_cast<std::size_t>(b)] - w0) / 2e12;
            jsa.f(a, b) = std::exp(-0.5 * (ds * ds + di * di));
        }
    }
    const std::string path = testkit::scratch_path("intensity.csv");
    write_intensity_csv(jsa, path, false);

    std::ifstream in(path);
    std::vector<std::vector<std::string>> cells;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        cells.push_back(row);
    }
    REQUIRE(cells.size() == 17);   // header plus one row per signal sample
    REQUIRE(cells[0].size() == 18); // axis label plus idler columns

    // Wavelength axes ascend.
    CHECK(std::stod(cells[0][1]) < std::stod(cells[0][17]));
    CHECK(std::stod(cells[1][0]) < std::stod(cells[16][0]));
    CHECK(std::stod(cells[0][1]) == rel_approx(nm_from_omega(g.omega_i.back()), 1e-9));
    CHECK(std::stod(cells[1][0]) == rel_approx(nm_from_omega(g.omega_s.back()), 1e-9));

    // Cell (row for a=15 printed first, col for b=16 printed first).
    const double mx = jsa.f.cwiseAbs2().maxCoeff();
    CHECK(std::stod(cells[1][1]) == rel_approx(std::norm(jsa.f(15, 16)) / mx, 1e-8));
    double best = 0.0;
    for (std::size_t r = 1; r < cells.size(); ++r)
        for (std::size_t c = 1; c < cells[r].size(); ++c)
            best = std::max(best, std::stod(cells[r][c]));
    CHECK(best == 1.0);

    const std::string logpath = testkit::scratch_path("intensity_log.csv");
    write_intensity_csv(jsa, logpath, true);
    std::ifstream lin(logpath);
    std::getline(lin, line); // header
    double lmax = -1e9, lmin = 1e9;
    while (std::getline(lin, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ','); // axis column
        while (std::getline(ls, cell, ',')) {
            const double v = std::stod(cell);
            lmax = std::max(lmax, v);
            lmin = std::min(lmin, v);
        }
    }
    CHECK(lmax == 0.0);
    CHECK(lmin >= -12.0);

    Jsa zero;
    zero.grid = g;
    zero.f = Eigen::MatrixXcd::Zero(16, 17);
    CHECK_THROWS_AS(write_intensity_csv(zero, path, false), numeric_error);
    CHECK_THROWS_AS(write_intensity_csv(jsa, "/nonexistent/dir/out.csv", false),
                    io_error);
}
