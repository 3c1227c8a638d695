#include "polariton/fit.hpp"

#include "polariton/bogoliubov.hpp"
#include "polariton/constants.hpp"
#include "polariton/errors.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

namespace polariton {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                            : comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return cells;
}

double parse_cell(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw FormatError(where, "invalid number \"" + s + "\"");
    return v;
}

void check_photons(std::span<const PhotonMode> photons) {
    if (photons.size() != 2)
        throw StructuralError("the coupling fit needs exactly two photon modes");
    for (const auto& p : photons)
        p.validate();
}

// Minimum squared error of a one-to-one assignment of peaks to branches.
double assign(const Eigen::VectorXd& branches, const std::vector<double>& peaks) {
    const int n = static_cast<int>(branches.size());
    const std::size_t m = peaks.size();
    if (m > static_cast<std::size_t>(n))
        throw DataError("record has more peaks than model branches");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double sum = 0.0;
        for (std::size_t k = 0; k < m && sum < best; ++k) {
            const double d = peaks[k] - branches(order[k]);
            sum += d * d;
        }
        best = std::min(best, sum);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

Eigen::VectorXd model_branches(const FitParams& p, const CouplingSet& c, std::span<const PhotonMode> photons,
                               double nu_c) {
    try {
        return diagonalize(assemble_hamiltonian(photons, nu_c, c)).frequencies;
    } catch (const InstabilityError& e) {
        std::ostringstream msg;
        msg << "Omega_11 = " << to_thz(p.omega_R_11) << " THz, Omega_2 = " << to_thz(p.omega_R_2_tilde)
            << " THz, eta = " << p.eta << ", nu_c = " << nu_c << " THz: " << e.what();
        throw InstabilityError(msg.str(), e.real_part_thz(), e.imag_part_thz());
    }
}

void check_coverage(const PeakDataset& data, std::span<const PhotonMode> photons) {
    if (data.records.size() < 3)
        throw DataError("fit needs at least 3 records, got " + std::to_string(data.records.size()));
    for (const auto& p : photons) {
        bool below = false, above = false;
        for (const auto& r : data.records) {
            below |= r.nu_c < p.frequency;
            above |= r.nu_c > p.frequency;
        }
        if (!below || !above) {
            std::ostringstream msg;
            msg << "records must have nu_c on both sides of the photon frequency " << p.frequency << " THz";
            throw DataError(msg.str());
        }
    }
}

struct Problem {
    const PeakDataset* data;
    std::span<const PhotonMode> photons;
    const FitConfig* config;
    double penalty_scale; // THz per unit of normalized distance outside the box
    long evaluations = 0;

    int dims() const { return config->fit_eta ? 3 : 2; }

    std::array<double, 3> lower() const {
        const auto& b = config->bounds;
        return {b.ratio_11_min, b.ratio_2_min, b.eta_min};
    }
    std::array<double, 3> upper() const {
        const auto& b = config->bounds;
        return {b.ratio_11_max, b.ratio_2_max, b.eta_max};
    }

    FitParams to_params(const double* x, double* outside) const {
        const auto lo = lower(), hi = upper();
        double dist2 = 0.0;
        std::array<double, 3> y{};
        for (int k = 0; k < dims(); ++k) {
            y[k] = std::clamp(x[k], lo[k], hi[k]);
            dist2 += (x[k] - y[k]) * (x[k] - y[k]);
        }
        if (outside)
            *outside = std::sqrt(dist2);
        return {y[0] * to_angular(photons[0].frequency), y[1] * to_angular(photons[1].frequency),
                config->fit_eta ? y[2] : config->eta};
    }

    double operator()(const double* x) {
        ++evaluations;
        double outside = 0.0;
        const FitParams p = to_params(x, &outside);
        return residual(p, *data, photons) + penalty_scale * outside;
    }
};

double gsl_objective(const gsl_vector* v, void* raw) {
    auto* problem = static_cast<Problem*>(raw);
    return (*problem)(gsl_vector_const_ptr(v, 0));
}

struct Restart {
    std::array<double, 3> x{};
    double value = std::numeric_limits<double>::infinity();
    long evaluations = 0;
    bool converged = false;
};

Restart run_restart(const PeakDataset& data, std::span<const PhotonMode> photons, const FitConfig& config,
                    const std::array<double, 3>& start, double penalty_scale) {
    Problem problem{&data, photons, &config, penalty_scale};
    const int n = problem.dims();
    const auto lo = problem.lower(), hi = problem.upper();

    using Vec = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
    using Min = std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)>;
    Vec x(gsl_vector_alloc(n), gsl_vector_free);
    Vec step(gsl_vector_alloc(n), gsl_vector_free);
    for (int k = 0; k < n; ++k) {
        gsl_vector_set(x.get(), k, start[k]);
        gsl_vector_set(step.get(), k, std::max(0.1 * (hi[k] - lo[k]), 1e-3));
    }
    gsl_multimin_function fn{gsl_objective, static_cast<std::size_t>(n), &problem};
    Min s(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get());

    Restart r;
    for (int it = 0; it < config.max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS)
            break;
        const double size = gsl_multimin_fminimizer_size(s.get());
        const double scale = std::max(gsl_blas_dnrm2(gsl_multimin_fminimizer_x(s.get())), 1e-12);
        if (size / scale < config.tolerance) {
            r.converged = true;
            break;
        }
    }
    const gsl_vector* best = gsl_multimin_fminimizer_x(s.get());
    for (int k = 0; k < n; ++k)
        r.x[k] = std::clamp(gsl_vector_get(best, k), lo[k], hi[k]);
    r.value = gsl_multimin_fminimizer_minimum(s.get());
    r.evaluations = problem.evaluations;
    return r;
}

} // namespace

void PeakDataset::validate() const {
    if (records.empty())
        throw DataError("peak dataset is empty");
    for (const auto& r : records) {
        if (!(r.nu_c >= 0.0) || !std::isfinite(r.nu_c))
            throw DataError("record nu_c must be finite and >= 0");
        if (r.peak_freqs.empty())
            throw DataError("record at nu_c = " + std::to_string(r.nu_c) + " THz has no peaks");
        for (double f : r.peak_freqs)
            if (!(f > 0.0) || !std::isfinite(f))
                throw DataError("peak frequencies must be finite and > 0");
    }
}

PeakDataset read_peaks_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open peaks file " + path.string());
    PeakDataset data;
    data.source_label = path.filename().string();
    std::string line;
    int line_no = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto cells = split_csv(t);
        if (columns == 0) {
            if (cells.front() != "nu_c_THz" || cells.size() < 2)
                throw FormatError(where, "header must be nu_c_THz,peak1_THz,...");
            columns = cells.size();
            continue;
        }
        if (cells.size() > columns)
            throw FormatError(where, "more cells than header columns");
        if (cells.front().empty())
            throw FormatError(where, "missing nu_c_THz");
        PeakRecord r;
        r.nu_c = parse_cell(cells.front(), where);
        if (r.nu_c < 0.0)
            throw FormatError(where, "nu_c_THz must be >= 0");
        for (std::size_t k = 1; k < cells.size(); ++k) {
            if (cells[k].empty())
                continue;
            const double f = parse_cell(cells[k], where);
            if (!(f > 0.0))
                throw FormatError(where, "peak frequencies must be > 0");
            r.peak_freqs.push_back(f);
        }
        if (r.peak_freqs.empty())
            throw FormatError(where, "record has no peaks");
        std::sort(r.peak_freqs.begin(), r.peak_freqs.end());
        data.records.push_back(std::move(r));
    }
    if (columns == 0)
        throw FormatError(path.string(), "missing header line");
    if (data.records.empty())
        throw DataError("peaks file " + path.string() + " contains no records");
    return data;
}

void FitBounds::validate() const {
    auto check = [](double lo, double hi, const char* name, double cap) {
        if (!(lo >= 0.0) || !(hi > lo) || !(hi <= cap))
            throw DomainError(std::string("invalid fit bounds for ") + name);
    };
    check(ratio_11_min, ratio_11_max, "omega_R_11_over_omega1", std::numeric_limits<double>::infinity());
    check(ratio_2_min, ratio_2_max, "omega_R_2_tilde_over_omega2", std::numeric_limits<double>::infinity());
    check(eta_min, eta_max, "eta", 1.0);
}

void FitConfig::validate() const {
    bounds.validate();
    if (!fit_eta && !(eta >= 0.0 && eta <= 1.0))
        throw DomainError("fixed eta must lie in [0, 1]");
    if (restarts < 1)
        throw DomainError("fit needs at least one restart");
    if (max_iterations < 1)
        throw DomainError("fit max_iterations must be >= 1");
    if (!(tolerance > 0.0))
        throw DomainError("fit tolerance must be > 0");
}

CouplingSet fit_couplings(const FitParams& p, std::span<const PhotonMode> photons) {
    check_photons(photons);
    return couplings_from_overlap(p.omega_R_11, p.omega_R_2_tilde, p.eta,
                                  {photons[0].frequency, photons[1].frequency});
}

std::vector<RecordResidual> record_residuals(const FitParams& p, const PeakDataset& data,
                                             std::span<const PhotonMode> photons) {
    data.validate();
    const CouplingSet c = fit_couplings(p, photons);
    std::vector<RecordResidual> out;
    out.reserve(data.records.size());
    for (const auto& r : data.records) {
        const double sq = assign(model_branches(p, c, photons, r.nu_c), r.peak_freqs);
        const int m = static_cast<int>(r.peak_freqs.size());
        out.push_back({r.nu_c, m, std::sqrt(sq / m)});
    }
    return out;
}

double residual(const FitParams& p, const PeakDataset& data, std::span<const PhotonMode> photons) {
    double sum = 0.0;
    long count = 0;
    for (const auto& r : record_residuals(p, data, photons)) {
        sum += r.rms * r.rms * r.n_peaks;
        count += r.n_peaks;
    }
    return std::sqrt(sum / static_cast<double>(count));
}

FitResult fit(const PeakDataset& data, std::span<const PhotonMode> photons, const FitConfig& config) {
    // GSL aborts by default; failures are reported through status codes instead.
    static std::once_flag gsl_quiet;
    std::call_once(gsl_quiet, [] { gsl_set_error_handler_off(); });
    config.validate();
    check_photons(photons);
    data.validate();
    check_coverage(data, photons);

    const double penalty_scale = std::max(photons[0].frequency, photons[1].frequency);
    const FitBounds& b = config.bounds;
    const std::array<double, 3> lo{b.ratio_11_min, b.ratio_2_min, b.eta_min};
    const std::array<double, 3> hi{b.ratio_11_max, b.ratio_2_max, b.eta_max};

    std::mt19937_64 rng(config.seed);
    std::vector<std::array<double, 3>> starts(static_cast<std::size_t>(config.restarts));
    for (auto& s : starts)
        for (int k = 0; k < 3; ++k)
            s[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);

    std::vector<Restart> results(starts.size());
    if (config.parallel && starts.size() > 1) {
        std::vector<std::future<Restart>> jobs;
        for (const auto& s : starts)
            jobs.push_back(std::async(std::launch::async, run_restart, std::cref(data), photons,
                                      std::cref(config), s, penalty_scale));
        for (std::size_t i = 0; i < jobs.size(); ++i)
            results[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < starts.size(); ++i)
            results[i] = run_restart(data, photons, config, starts[i], penalty_scale);
    }

    FitResult out;
    for (const auto& r : results)
        out.n_evaluations += r.evaluations;
    int best = -1;
    for (int i = 0; i < static_cast<int>(results.size()); ++i)
        if (results[i].converged && (best < 0 || results[i].value < results[best].value))
            best = i;
    if (best < 0)
        throw ConvergenceError("no fit restart converged within " + std::to_string(config.max_iterations) +
                               " iterations");

    const auto& r = results[static_cast<std::size_t>(best)];
    out.ratio_11 = r.x[0];
    out.ratio_2 = r.x[1];
    out.eta = config.fit_eta ? r.x[2] : config.eta;
    out.omega_R_11 = out.ratio_11 * to_angular(photons[0].frequency);
    out.omega_R_2_tilde = out.ratio_2 * to_angular(photons[1].frequency);
    out.residual_rms = residual(out.params(), data, photons);
    out.converged = true;
    out.best_restart = best;
    return out;
}

} // namespace polariton
