#include "polariton/dispersion.hpp"

#include "polariton/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace polariton {

namespace {

constexpr int kFractionProbeSteps = 25;
constexpr double kProbeSeparationFactor = 3.0;
constexpr double kCoreWindowFactor = 4.0;
constexpr double kOuterWindowFactor = 12.0;
constexpr double kRequiredLow = 0.05;  // THz
constexpr double kRequiredHigh = 2.0;  // THz

std::string annotate(double nu_c, const char* what) {
    std::ostringstream msg;
    msg << "at nu_c = " << nu_c << " THz: " << what;
    return msg.str();
}

EigenSolution solve_point(std::span<const PhotonMode> photons, const CouplingSet& c, double nu_c) {
    try {
        return diagonalize(assemble_hamiltonian(photons, nu_c, c));
    } catch (const InstabilityError& e) {
        throw InstabilityError(annotate(nu_c, e.what()), e.real_part_thz(), e.imag_part_thz());
    } catch (const NumericalError& e) {
        throw NumericalError(annotate(nu_c, e.what()));
    }
}

std::vector<EigenSolution> solve_all(std::span<const PhotonMode> photons, const CouplingSet& c,
                                     const std::vector<double>& grid, const SweepOptions& options) {
    const std::size_t n = grid.size();
    std::vector<EigenSolution> out(n);
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    if (!options.parallel)
        threads = 1;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = solve_point(photons, c, grid[i]);
    };
    if (threads <= 1) {
        work(0, n);
        return out;
    }
    // Contiguous chunks, joined in order, so the reported failure is always
    // the one at the smallest ν_c.
    std::vector<std::future<void>> jobs;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk)
        jobs.push_back(std::async(std::launch::async, work, begin, std::min(n, begin + chunk)));
    std::exception_ptr first;
    for (auto& j : jobs) {
        try {
            j.get();
        } catch (...) {
            if (!first)
                first = std::current_exception();
        }
    }
    if (first)
        std::rethrow_exception(first);
    return out;
}

// perm[column] = index into the sorted eigenvalues of the new point.
std::vector<int> match_point(const Eigen::VectorXd& predicted, const Eigen::VectorXd& values) {
    const int n = static_cast<int>(values.size());
    struct Pair {
        double d;
        int column, index;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            pairs.push_back({std::abs(predicted(j) - values(k)), j, k});
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });

    std::vector<int> perm(n, -1);
    std::vector<char> used(n, 0);
    for (const auto& p : pairs) {
        if (perm[p.column] >= 0 || used[p.index])
            continue;
        perm[p.column] = p.index;
        used[p.index] = 1;
    }

    auto cost = [&](int j, int k) { return (predicted(j) - values(k)) * (predicted(j) - values(k)); };
    for (bool improved = true; improved;) {
        improved = false;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                const double now = cost(a, perm[a]) + cost(b, perm[b]);
                const double swapped = cost(a, perm[b]) + cost(b, perm[a]);
                if (swapped < now * (1.0 - 1e-12) - 1e-300) {
                    std::swap(perm[a], perm[b]);
                    improved = true;
                }
            }
    }
    return perm;
}

std::vector<double> column_separation(const SweepResult& s, int a, int b) {
    std::vector<double> sep(static_cast<std::size_t>(s.n_points()));
    for (int i = 0; i < s.n_points(); ++i)
        sep[i] = std::abs(s.branches(i, a) - s.branches(i, b));
    return sep;
}

// Interior strict local minima of sep below `limit`.
std::vector<int> narrow_minima(const std::vector<double>& sep, double limit) {
    std::vector<int> out;
    for (std::size_t i = 1; i + 1 < sep.size(); ++i)
        if (sep[i] < limit && sep[i] <= sep[i - 1] && sep[i] < sep[i + 1])
            out.push_back(static_cast<int>(i));
    return out;
}

int probe_index(const std::vector<double>& sep, int i0, int direction) {
    const int n = static_cast<int>(sep.size());
    int i = i0;
    for (int step = 1; step <= kFractionProbeSteps; ++step) {
        const int next = i0 + direction * step;
        if (next < 0 || next >= n)
            break;
        i = next;
        if (sep[i] >= kProbeSeparationFactor * sep[i0])
            break;
    }
    return i;
}

void swap_tails(SweepResult& s, int a, int b, int from) {
    for (int i = from; i < s.n_points(); ++i) {
        std::swap(s.branches(i, a), s.branches(i, b));
        Eigen::RowVectorXd tmp = s.fractions[i].row(a);
        s.fractions[i].row(a) = s.fractions[i].row(b);
        s.fractions[i].row(b) = tmp;
    }
}

// Follow character through avoided crossings too narrow for the frequency
// predictor to resolve.
void relabel_weak_crossings(SweepResult& s) {
    const int nb = s.n_branches();
    for (int a = 0; a < nb; ++a)
        for (int b = a + 1; b < nb; ++b) {
            const auto sep = column_separation(s, a, b);
            for (int i0 : narrow_minima(sep, kWeakCrossingGap)) {
                const int before = probe_index(sep, i0, -1);
                const int after = probe_index(sep, i0, +1);
                if (before == i0 || after == i0)
                    continue;
                const auto& fb = s.fractions[before];
                const auto& fa = s.fractions[after];
                const double keep = fb.row(a).dot(fa.row(a)) + fb.row(b).dot(fa.row(b));
                const double cross = fb.row(a).dot(fa.row(b)) + fb.row(b).dot(fa.row(a));
                if (cross > keep)
                    swap_tails(s, a, b, i0 + 1);
            }
        }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Replace the column's values near each narrow crossing with the diabatic
// continuation of a two-level model: sep² = Δ(ν_c)² + c0 with Δ linear.
std::vector<double> unmix_column(const SweepResult& s, int column) {
    const auto& x = s.nu_c_values;
    const int n = s.n_points();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[i] = s.branches(i, column);

    for (int other = 0; other < s.n_branches(); ++other) {
        if (other == column)
            continue;
        const auto sep = column_separation(s, column, other);
        for (int i0 : narrow_minima(sep, kWeakCrossingGap)) {
            auto window = [&](double factor, int min_half) {
                int lo = i0, hi = i0;
                while (lo > 0 && sep[lo - 1] < factor * sep[i0])
                    --lo;
                while (hi + 1 < n && sep[hi + 1] < factor * sep[i0])
                    ++hi;
                lo = std::max(0, std::min(lo, i0 - min_half));
                hi = std::min(n - 1, std::max(hi, i0 + min_half));
                return std::pair{lo, hi};
            };
            const auto [c_lo, c_hi] = window(kCoreWindowFactor, 2);
            const int m = c_hi - c_lo + 1;
            Eigen::MatrixXd a(m, 3);
            Eigen::VectorXd y(m);
            for (int i = c_lo; i <= c_hi; ++i) {
                const double t = x[i] - x[i0];
                a.row(i - c_lo) << t * t, t, 1.0;
                y(i - c_lo) = sep[i] * sep[i];
            }
            const Eigen::Vector3d q = a.colPivHouseholderQr().solve(y);
            double c0 = sep[i0] * sep[i0];
            if (q(0) > 0.0)
                c0 = std::clamp(q(2) - q(1) * q(1) / (4.0 * q(0)), 0.0, c0);

            const auto [o_lo, o_hi] = window(kOuterWindowFactor, 2);
            for (int i = o_lo; i <= o_hi; ++i) {
                const double v = s.branches(i, column);
                const double w = s.branches(i, other);
                const double half = 0.5 * std::sqrt(std::max(sep[i] * sep[i] - c0, 0.0));
                out[i] = 0.5 * (v + w) + (v >= w ? half : -half);
            }
        }
    }
    return out;
}

// Position of steepest ascent, refined by a parabola through the slopes.
std::optional<double> steepest_point(const std::vector<double>& x, const std::vector<double>& v) {
    const int n = static_cast<int>(x.size());
    if (n < 5)
        return std::nullopt;
    std::vector<double> slope(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
    for (int i = 1; i + 1 < n; ++i)
        slope[i] = (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]);
    const int k = static_cast<int>(std::max_element(slope.begin(), slope.end()) - slope.begin());
    if (k < 2 || k > n - 3)
        return std::nullopt;
    const double sm = slope[k - 1], s0 = slope[k], sp = slope[k + 1];
    const double curv = sm - 2.0 * s0 + sp;
    double shift = 0.0;
    if (curv < 0.0)
        shift = std::clamp(0.5 * (sm - sp) / curv, -0.5, 0.5);
    const double h = shift >= 0.0 ? x[k + 1] - x[k] : x[k] - x[k - 1];
    return x[k] + shift * h;
}

} // namespace

double SweepResult::photon_fraction(int point, int column) const {
    return fractions[point].row(column).head(n_photon).sum();
}

double SweepResult::matter_fraction(int point, int column) const {
    const auto& f = fractions[point];
    return f.row(column).tail(f.cols() - n_photon).sum();
}

std::vector<double> make_grid(double start, double stop, double step) {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step))
        throw DomainError("sweep grid bounds must be finite");
    if (!(step > 0.0))
        throw DomainError("sweep step must be > 0");
    if (!(start >= 0.0))
        throw DomainError("sweep start must be >= 0");
    if (!(stop > start))
        throw DomainError("sweep stop must exceed start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-6)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = start + static_cast<double>(i) * step;
    return grid;
}

SweepResult sweep(std::span<const PhotonMode> photons, const CouplingSet& c,
                  const std::vector<double>& nu_c_grid, const SweepOptions& options) {
    if (nu_c_grid.size() < 2)
        throw DomainError("sweep grid needs at least 2 points");
    for (std::size_t i = 0; i < nu_c_grid.size(); ++i) {
        if (!(nu_c_grid[i] >= 0.0) || !std::isfinite(nu_c_grid[i]))
            throw DomainError("sweep grid values must be finite and >= 0");
        if (i > 0 && !(nu_c_grid[i] > nu_c_grid[i - 1]))
            throw DomainError("sweep grid must be strictly ascending");
    }

    const auto solutions = solve_all(photons, c, nu_c_grid, options);
    const int np = static_cast<int>(nu_c_grid.size());
    const int nb = solutions.front().n_modes();

    SweepResult s;
    s.n_photon = solutions.front().n_photon;
    s.nu_c_values = nu_c_grid;
    s.branches.resize(np, nb);
    s.fractions.resize(static_cast<std::size_t>(np));

    s.branches.row(0) = solutions[0].frequencies.transpose();
    s.fractions[0] = solutions[0].fractions;
    for (int i = 1; i < np; ++i) {
        Eigen::VectorXd predicted = s.branches.row(i - 1).transpose();
        if (i >= 2) {
            const double r = (nu_c_grid[i] - nu_c_grid[i - 1]) / (nu_c_grid[i - 1] - nu_c_grid[i - 2]);
            predicted += r * (s.branches.row(i - 1) - s.branches.row(i - 2)).transpose();
        }
        const auto& sol = solutions[static_cast<std::size_t>(i)];
        const auto perm = match_point(predicted, sol.frequencies);
        s.fractions[i].resize(nb, sol.fractions.cols());
        for (int j = 0; j < nb; ++j) {
            s.branches(i, j) = sol.frequencies(perm[j]);
            s.fractions[i].row(j) = sol.fractions.row(perm[j]);
        }
    }
    relabel_weak_crossings(s);
    return s;
}

DispersionFeatures detect_features(const SweepResult& s, std::span<const PhotonMode> photons) {
    if (s.n_points() < 2 || s.nu_c_values.front() > kRequiredLow + 1e-9 ||
        s.nu_c_values.back() < kRequiredHigh - 1e-9)
        throw RangeError("feature detection needs a sweep covering nu_c in [0.05, 2.0] THz");
    if (static_cast<int>(photons.size()) != s.n_photon)
        throw StructuralError("photon mode count does not match the sweep");

    DispersionFeatures f;
    const int np = s.n_points();
    for (int col = 0; col < s.n_branches(); ++col) {
        const auto values = s.branches.col(col);
        if (values.maxCoeff() - values.minCoeff() <= kVariationTolerance)
            continue;
        std::vector<double> photon(static_cast<std::size_t>(np)), matter(static_cast<std::size_t>(np));
        for (int i = 0; i < np; ++i) {
            photon[i] = s.photon_fraction(i, col);
            matter[i] = s.matter_fraction(i, col);
        }
        const double mp = median(photon);
        if (mp < kMixingFloor)
            f.residual_columns.push_back(col);
        else if (median(matter) >= kMixingFloor)
            f.coupled_columns.push_back(col);
    }
    f.n_coupled_branches = static_cast<int>(f.coupled_columns.size());
    f.n_residual_lines = static_cast<int>(f.residual_columns.size());

    for (const auto& p : photons) {
        const auto it = std::min_element(s.nu_c_values.begin(), s.nu_c_values.end(),
                                         [&](double a, double b) { return std::abs(a - p.frequency) < std::abs(b - p.frequency); });
        const int i = static_cast<int>(it - s.nu_c_values.begin());
        std::optional<double> gap;
        if (p.frequency >= s.nu_c_values.front() && p.frequency <= s.nu_c_values.back()) {
            double above = std::numeric_limits<double>::infinity();
            double below = -std::numeric_limits<double>::infinity();
            for (int col : f.coupled_columns) {
                const double v = s.branches(i, col);
                if (v >= p.frequency)
                    above = std::min(above, v);
                else
                    below = std::max(below, v);
            }
            if (std::isfinite(above) && std::isfinite(below))
                gap = above - below;
        }
        f.gap_at_resonance.push_back(gap);
    }

    // An S-branch connects the lowest and highest photon frequencies without
    // an anti-crossing, which requires a matter mode to have decoupled.
    if (f.n_residual_lines > 0 && !photons.empty()) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& p : photons) {
            lo = std::min(lo, p.frequency);
            hi = std::max(hi, p.frequency);
        }
        for (int col : f.coupled_columns) {
            if (s.branches(0, col) > lo && s.branches(np - 1, col) < hi) {
                SBranch b;
                b.column = col;
                b.values = unmix_column(s, col);
                b.asymptote_low = b.values.front();
                b.asymptote_high = b.values.back();
                b.inflection_nu_c = steepest_point(s.nu_c_values, b.values);
                f.s_branch = std::move(b);
                break;
            }
        }
    }
    return f;
}

void SpectrumConfig::validate() const {
    if (linewidths.empty())
        throw DomainError("spectrum linewidths must not be empty");
    for (double g : linewidths)
        if (!(g > 0.0) || !std::isfinite(g))
            throw DomainError("spectrum linewidths must be > 0");
    if (frequency_grid.size() < 2)
        throw DomainError("spectrum frequency grid needs at least 2 points");
    for (std::size_t i = 1; i < frequency_grid.size(); ++i)
        if (!(frequency_grid[i] > frequency_grid[i - 1]))
            throw DomainError("spectrum frequency grid must be strictly ascending");
}

double SpectrumConfig::linewidth(int branch) const {
    if (linewidths.size() == 1)
        return linewidths.front();
    if (branch < 0 || static_cast<std::size_t>(branch) >= linewidths.size())
        throw StructuralError("no linewidth configured for branch " + std::to_string(branch + 1));
    return linewidths[static_cast<std::size_t>(branch)];
}

std::vector<double> synthesize_spectrum(const EigenSolution& sol, const SpectrumConfig& cfg) {
    cfg.validate();
    const int nb = sol.n_modes();
    std::vector<double> t(cfg.frequency_grid.size(), 1.0);
    for (int k = 0; k < nb; ++k) {
        const double w = cfg.weight_mode == WeightMode::equal ? 1.0 / nb
                                                              : std::clamp(sol.photon_fraction(k), 0.0, 1.0);
        const double g2 = cfg.linewidth(k) * cfg.linewidth(k);
        const double nu_k = sol.frequencies(k);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double d = cfg.frequency_grid[i] - nu_k;
            t[i] -= w * g2 / (d * d + g2);
        }
    }
    for (double& v : t)
        v = std::clamp(v, 0.0, 1.0);
    return t;
}

std::vector<std::vector<double>> spectrum_map(std::span<const PhotonMode> photons, const CouplingSet& c,
                                              const std::vector<double>& nu_c_grid,
                                              const SpectrumConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<double>> rows;
    rows.reserve(nu_c_grid.size());
    for (double nu_c : nu_c_grid)
        rows.push_back(synthesize_spectrum(solve_point(photons, c, nu_c), cfg));
    return rows;
}

std::vector<double> transmission_minima(const std::vector<double>& transmission,
                                        const std::vector<double>& frequency_grid, double min_depth) {
    if (transmission.size() != frequency_grid.size())
        throw StructuralError("transmission and frequency grid differ in length");
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < transmission.size(); ++i)
        if (transmission[i] < transmission[i - 1] && transmission[i] <= transmission[i + 1] &&
            1.0 - transmission[i] >= min_depth)
            out.push_back(frequency_grid[i]);
    return out;
}

void write_branches_csv(std::ostream& out, const SweepResult& s) {
    const int nm = s.fractions.empty() ? 0 : static_cast<int>(s.fractions.front().cols());
    const int n_matter = nm - s.n_photon;
    out << "nu_c_THz,branch,freq_THz";
    for (int j = 1; j <= s.n_photon; ++j)
        out << ",photon_frac_" << j;
    for (int j = 1; j <= n_matter; ++j)
        out << ",matter_frac_" << j;
    out << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
        out << buf;
    };
    for (int i = 0; i < s.n_points(); ++i)
        for (int col = 0; col < s.n_branches(); ++col) {
            put(s.nu_c_values[i]);
            out << ',' << col + 1 << ',';
            put(s.branches(i, col));
            for (int j = 0; j < nm; ++j) {
                out << ',';
                put(s.fractions[i](col, j));
            }
            out << '\n';
        }
}

} // namespace polariton
