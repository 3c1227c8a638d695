// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"

#include "polariton/bogoliubov.hpp"
#include "polariton/constants.hpp"
#include "polariton/dispersion.hpp"
#include "polariton/fit.hpp"
#include "polariton/model.hpp"
#include "polariton/overlap.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace polariton;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    if (!ok)
        ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const std::vector<PhotonMode> kPhotons{{1, 0.8, std::nullopt, "LC"}, {2, 1.6, std::nullopt, "DP"}};

// Normalized couplings (Ω_11/ω_1, Ω_22/ω_2, Ω_21/ω_1) to a coupling set.
CouplingSet from_ratios(double r11, double r22, double r21) {
    const double w1 = to_angular(0.8), w2 = to_angular(1.6);
    const double o21 = r21 * w1, o22 = r22 * w2;
    const double tilde = std::hypot(o21, o22);
    return couplings_from_overlap(r11 * w1, tilde, tilde > 0 ? o21 / tilde : 0.0, {0.8, 1.6});
}

CouplingSet unstructured() { return from_ratios(0.37, 0.21, 0.07); }
CouplingSet structured() { return from_ratios(0.28, 6e-3, 0.27); }

std::vector<double> sweep_grid() { return make_grid(0.05, 2.2, 0.01); }

void mode_counts() {
    const auto t0 = Clock::now();
    const auto fu = detect_features(sweep(kPhotons, unstructured(), sweep_grid()), kPhotons);
    const auto fs = detect_features(sweep(kPhotons, structured(), sweep_grid()), kPhotons);
    const double dt = seconds_since(t0);
    const bool ok = fu.n_coupled_branches == 4 && fs.n_coupled_branches == 3 && fs.n_residual_lines == 1 &&
                    dt < 5.0;
    report(1, "mode counts", ok,
           fmt("unstructured %d coupled; structured %d coupled + %d cyclotron line; %.3f s", fu.n_coupled_branches,
               fs.n_coupled_branches, fs.n_residual_lines, dt));
}

void s_shape() {
    const auto grid = sweep_grid();
    const auto f = detect_features(sweep(kPhotons, structured(), grid), kPhotons);
    if (!f.s_branch) {
        report(2, "S-shape features", false, "no S-branch detected");
        return;
    }
    const auto& s = *f.s_branch;
    const bool plateau = s.asymptote_low >= 0.85 && s.asymptote_low <= 1.00;
    const bool inflection = s.inflection_nu_c && std::abs(*s.inflection_nu_c - 1.25) <= 0.15;
    const bool high = std::abs(s.asymptote_high - 1.6) <= 0.05 * 1.6;
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < s.values.size(); ++i)
        worst_drop = std::max(worst_drop, s.values[i - 1] - s.values[i]);
    const bool monotone = worst_drop <= 1e-6;
    report(2, "S-shape features", plateau && inflection && high && monotone,
           fmt("plateau %.4f THz, inflection %.4f THz, nu(2.2) %.4f THz, largest drop %.2e THz", s.asymptote_low,
               s.inflection_nu_c.value_or(NAN), s.asymptote_high, worst_drop));
}

void blue_shift() {
    const auto sol = diagonalize(assemble_hamiltonian(kPhotons, 0.05, unstructured()));
    const double up1 = sol.frequencies(2), up2 = sol.frequencies(3);
    const bool ok = up1 > 0.8 && up2 > 1.6 && up2 >= 1.65 && up2 <= 1.85;
    report(3, "zero-field blue shift", ok, fmt("UP1 %.4f THz, UP2 %.4f THz at nu_c = 0.05 THz", up1, up2));
}

void identity() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> tilde(1e11, 1e13), eta(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = tilde(rng);
        const auto c = couplings_from_overlap(1e12, t, eta(rng), {0.8, 1.6});
        const double sum = c.rabi(1, 0) * c.rabi(1, 0) + c.rabi(1, 1) * c.rabi(1, 1);
        worst = std::max(worst, std::abs(sum - t * t) / (t * t));
    }
    const auto one = couplings_from_overlap(1e12, 5e12, 1.0, {0.8, 1.6});
    report(4, "coupling identity", worst <= 1e-12 && one.rabi(1, 1) == 0.0,
           fmt("worst relative error %.2e over 1000 pairs; eta = 1 gives Omega_22 = %g", worst, one.rabi(1, 1)));
}

void oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> freq(0.2, 2.0);
    double freq_err = 0.0, norm_err = 0.0, pair_err = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + trial % 3;
        QuadraticHamiltonian h;
        h.n_photon = n / 2;
        h.diag_freqs.resize(n);
        for (int i = 0; i < n; ++i)
            h.diag_freqs(i) = to_angular(freq(rng));
        h.interaction = oracle::random_stable_interaction(rng, h.diag_freqs, 0.3);
        const auto sol = diagonalize(h);
        const Eigen::VectorXd b = oracle::brute_force_frequencies(h.diag_freqs, h.interaction);
        for (int k = 0; k < n; ++k) {
            freq_err = std::max(freq_err, std::abs(to_angular(sol.frequencies(k)) - b(k)) / b(k));
            const double norm = sol.hopfield_x.row(k).squaredNorm() - sol.hopfield_y.row(k).squaredNorm();
            norm_err = std::max(norm_err, std::abs(norm - 1.0));
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(build_dynamical_matrix(h).cast<std::complex<double>>(), false);
        std::vector<double> re;
        for (int k = 0; k < 2 * n; ++k)
            re.push_back(es.eigenvalues()(k).real());
        std::sort(re.begin(), re.end());
        for (int k = 0; k < n; ++k)
            pair_err = std::max(pair_err, std::abs(re[k] + re[2 * n - 1 - k]) / re[2 * n - 1 - k]);
    }
    const double dt = seconds_since(t0);
    report(5, "diagonalizer oracle", freq_err <= 1e-8 && norm_err <= 1e-9 && pair_err <= 1e-9 && dt < 30.0,
           fmt("500 Hamiltonians: frequency %.2e rel, norm %.2e, pairing %.2e; %.3f s", freq_err, norm_err,
               pair_err, dt));
}

void decoupling() {
    const auto c = from_ratios(0.37, 0.21, 0.0);
    const auto grid = sweep_grid();
    const auto s = sweep(kPhotons, c, grid);
    const double w1 = to_angular(0.8), w2 = to_angular(1.6);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto a = oracle::hopfield_pair(0.8, grid[i], 0.37 * w1, 0.8);
        const auto b = oracle::hopfield_pair(1.6, grid[i], 0.21 * w2, 1.6);
        std::vector<double> expect{a[0], a[1], b[0], b[1]};
        std::sort(expect.begin(), expect.end());
        std::vector<double> got(s.branches.cols());
        for (Eigen::Index k = 0; k < s.branches.cols(); ++k)
            got[k] = s.branches(static_cast<Eigen::Index>(i), k);
        std::sort(got.begin(), got.end());
        for (std::size_t k = 0; k < 4; ++k)
            worst = std::max(worst, std::abs(got[k] - expect[k]));
    }
    report(6, "decoupling limit", worst <= 1e-9, fmt("largest deviation %.2e THz over %zu points", worst, grid.size()));
}

FieldProfile random_profile(std::mt19937_64& rng, int nx, int ny) {
    std::normal_distribution<double> g;
    FieldProfile f{nx, ny, 0.5, 0.5, {}};
    for (int i = 0; i < nx * ny; ++i)
        f.values.emplace_back(g(rng), g(rng));
    return f;
}

void overlap_limits() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    double scalar_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto f = random_profile(rng, 12, 9);
        FieldProfile cf = f;
        const std::complex<double> c(g(rng), g(rng));
        for (auto& v : cf.values)
            v *= c;
        scalar_err = std::max(scalar_err, std::abs(overlap_parameter(f, cf, full_mask(f)) - 1.0));
    }
    bool schwarz = true;
    for (int i = 0; i < 1000; ++i) {
        const auto f = random_profile(rng, 10, 10), h = random_profile(rng, 10, 10);
        const auto m = full_mask(f);
        const double lhs = std::norm(overlap_integral(f, h, m));
        const double rhs = overlap_integral(f, f, m).real() * overlap_integral(h, h, m).real();
        schwarz = schwarz && lhs <= rhs * (1 + 1e-12);
    }
    const FixtureGeometry geo;
    const auto lc = synthetic_profile(ProfileKind::lc, geo);
    const auto dp = synthetic_profile(ProfileKind::dipolar, geo);
    const double central = overlap_parameter(lc, dp, central_mask(lc, 8.0, 8.0));
    const double full = overlap_parameter(lc, dp, full_mask(lc));
    report(7, "overlap limits", scalar_err <= 1e-12 && schwarz && central > 0.99 && full < 0.3,
           fmt("scalar multiple %.2e; Cauchy-Schwarz %s on 1000 pairs; fixture eta %.4f central, %.4f full",
               scalar_err, schwarz ? "holds" : "violated", central, full));
}

PeakDataset synthetic_peaks(const FitParams& p, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise > 0 ? noise : 1.0);
    const auto c = fit_couplings(p, kPhotons);
    PeakDataset d;
    for (double nu : make_grid(0.05, 2.2, 0.05)) {
        const auto sol = diagonalize(assemble_hamiltonian(kPhotons, nu, c));
        PeakRecord r{nu, {}};
        for (int k = 0; k < sol.n_modes(); ++k)
            r.peak_freqs.push_back(sol.frequencies(k) + (noise > 0 ? g(rng) : 0.0));
        std::sort(r.peak_freqs.begin(), r.peak_freqs.end());
        d.records.push_back(r);
    }
    return d;
}

void fit_round_trip() {
    const double eta = 0.15;
    const FitParams truth{0.37 * to_angular(0.8), 0.21 / std::sqrt(1 - eta * eta) * to_angular(1.6), eta};
    const double r11 = truth.omega_R_11 / to_angular(0.8), r2 = truth.omega_R_2_tilde / to_angular(1.6);
    FitConfig cfg;
    cfg.eta = eta;
    auto rel = [&](const FitResult& f) {
        return std::max(std::abs(f.ratio_11 / r11 - 1), std::abs(f.ratio_2 / r2 - 1));
    };
    const auto t0 = Clock::now();
    const double clean = rel(fit(synthetic_peaks(truth, 0.0, 0), kPhotons, cfg));
    int good = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        cfg.seed = seed;
        const double e = rel(fit(synthetic_peaks(truth, 0.01, seed), kPhotons, cfg));
        worst = std::max(worst, e);
        good += e <= 0.05;
    }
    const double dt = seconds_since(t0);
    report(8, "fit round trip", clean <= 5e-3 && good >= 18 && dt < 120.0,
           fmt("noiseless %.2e rel; noisy %d/20 within 5%% (worst %.3f); %.2f s", clean, good, worst, dt));
}

void cyclotron() {
    const MaterialParams m;
    const double one = cyclotron_frequency(1.0, m);
    double lin = 0.0;
    for (double b : {0.1, 0.5, 2.0, 7.3, 15.0})
        lin = std::max(lin, std::abs(cyclotron_frequency(b, m) - b * one) / (b * one));
    report(9, "cyclotron conversion", std::abs(one - 0.39986) <= 1e-4 && lin <= 4e-16,
           fmt("nu_c(1 T) = %.6f THz; linearity %.1e rel", one, lin));
}

void spectrum_proxy() {
    const auto grid = sweep_grid();
    const auto c = structured();
    const auto s = sweep(kPhotons, c, grid);
    SpectrumConfig cfg;
    cfg.linewidths = {0.03};
    cfg.frequency_grid = make_grid(0.0, 2.5, 0.005);
    const auto map = spectrum_map(kPhotons, c, grid, cfg);
    double worst = 0.0;
    int n_minima = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (double m : transmission_minima(map[i], cfg.frequency_grid, 0.01)) {
            double best = INFINITY;
            for (Eigen::Index k = 0; k < s.branches.cols(); ++k)
                best = std::min(best, std::abs(m - s.branches(static_cast<Eigen::Index>(i), k)));
            worst = std::max(worst, best);
            ++n_minima;
        }
    }
    report(10, "spectrum proxy", worst <= 0.05 && n_minima > 0,
           fmt("%d transmission minima, farthest %.4f THz from a swept branch", n_minima, worst));
}

} // namespace

int main() {
    const std::vector<std::function<void()>> criteria{mode_counts,    s_shape,   blue_shift, identity,
                                                      oracle_equivalence, decoupling, overlap_limits,
                                                      fit_round_trip, cyclotron, spectrum_proxy};
    for (const auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& e) {
            report(0, "exception", false, e.what());
        }
    }
    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
