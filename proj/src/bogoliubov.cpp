#include "polariton/bogoliubov.hpp"

#include "polariton/constants.hpp"
#include "polariton/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace polariton {

namespace {

using cd = std::complex<double>;

// <u, v> = u† Σ v with Σ = diag(I, −I).
cd symplectic_dot(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v, Eigen::Index n) {
    return u.head(n).dot(v.head(n)) - u.tail(n).dot(v.tail(n));
}

// Gram–Schmidt in the symplectic metric, which is positive definite on a
// positive-frequency eigenspace of a stable Hamiltonian. Returns the accepted
// vectors; vectors whose residual norm falls below `drop` are skipped.
std::vector<Eigen::VectorXcd> symplectic_orthonormalize(const std::vector<Eigen::VectorXcd>& in,
                                                        Eigen::Index n, std::size_t keep,
                                                        double drop) {
    std::vector<Eigen::VectorXcd> out;
    for (const auto& v0 : in) {
        if (out.size() == keep)
            break;
        Eigen::VectorXcd v = v0;
        for (const auto& u : out)
            v -= u * symplectic_dot(u, v, n);
        const double norm = symplectic_dot(v, v, n).real();
        if (!(norm > drop))
            continue;
        out.push_back(v / std::sqrt(norm));
    }
    return out;
}

// Re-base a degenerate positive-frequency eigenspace onto projected bare modes.
std::vector<Eigen::VectorXcd> rebase_cluster(const std::vector<Eigen::VectorXcd>& cluster,
                                             Eigen::Index n) {
    const auto basis = symplectic_orthonormalize(cluster, n, cluster.size(), 1e-12);
    if (basis.size() != cluster.size())
        throw NumericalError("degenerate eigenspace is not symplectically regular");

    // Projection of bare mode e_j (X = e_j, Y = 0): Σ_k u_k <u_k, e_j>, with
    // <u_k, e_j> = conj(X_k[j]).
    std::vector<Eigen::VectorXcd> projections(static_cast<std::size_t>(n));
    std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXcd p = Eigen::VectorXcd::Zero(2 * n);
        for (const auto& u : basis) {
            const cd coef = std::conj(u(j));
            p += u * coef;
            weight[j] += std::norm(coef);
        }
        projections[j] = std::move(p);
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return weight[a] > weight[b] + 1e-12; });

    std::vector<Eigen::VectorXcd> ordered;
    for (Eigen::Index j : order)
        ordered.push_back(projections[j]);
    auto rebased = symplectic_orthonormalize(ordered, n, cluster.size(), 1e-10);
    if (rebased.size() != cluster.size())
        return basis;
    return rebased;
}

// Make the largest X component real and positive so output is reproducible.
void fix_phase(Eigen::VectorXcd& v, Eigen::Index n) {
    Eigen::Index imax = 0;
    v.head(n).cwiseAbs().maxCoeff(&imax);
    const cd pivot = v(imax);
    if (std::abs(pivot) > 0.0)
        v *= std::conj(pivot) / std::abs(pivot);
}

struct Branch {
    double omega; // rad/s
    Eigen::VectorXcd vec;
    double photon_fraction = 0.0;
    Eigen::Index dominant = 0;
};

} // namespace

double EigenSolution::photon_fraction(int branch) const {
    return fractions.row(branch).head(n_photon).sum();
}

double EigenSolution::matter_fraction(int branch) const {
    return fractions.row(branch).tail(n_modes() - n_photon).sum();
}

Eigen::MatrixXd build_dynamical_matrix(const QuadraticHamiltonian& h) {
    h.validate();
    const Eigen::Index n = h.n_modes();
    const Eigen::MatrixXd b = 2.0 * h.interaction;
    Eigen::MatrixXd a = b;
    a.diagonal() += h.diag_freqs;

    Eigen::MatrixXd m(2 * n, 2 * n);
    m << a, b, -b, -a;
    return m;
}

EigenSolution diagonalize(const QuadraticHamiltonian& h) {
    const Eigen::MatrixXd m = build_dynamical_matrix(h);
    const Eigen::Index n = h.n_modes();
    const double scale = m.cwiseAbs().maxCoeff();

    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, true);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge on the dynamical matrix");
    const Eigen::VectorXcd lambda = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();

    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double re = lambda(i).real();
        const double im = lambda(i).imag();
        if (std::abs(im) > kImagTolerance * std::abs(re) + floor) {
            std::ostringstream msg;
            msg << "unstable quadratic form: eigenfrequency " << to_thz(re) << (im < 0 ? " - " : " + ")
                << std::abs(to_thz(im)) << "i THz";
            throw InstabilityError(msg.str(), to_thz(re), to_thz(im));
        }
    }

    std::vector<Branch> branches;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        Eigen::VectorXcd v = vectors.col(i);
        const double norm = symplectic_dot(v, v, n).real();
        if (norm <= 0.0)
            continue;
        const double omega = lambda(i).real();
        if (!(omega > 0.0)) {
            std::ostringstream msg;
            msg << "unstable quadratic form: positive-norm mode with frequency " << to_thz(omega) << " THz";
            throw InstabilityError(msg.str(), to_thz(omega), 0.0);
        }
        v /= std::sqrt(norm);
        branches.push_back({omega, std::move(v)});
    }
    if (branches.size() != static_cast<std::size_t>(n)) {
        std::ostringstream msg;
        msg << "unstable quadratic form: found " << branches.size() << " positive-norm modes, expected " << n;
        throw InstabilityError(msg.str(), 0.0, 0.0);
    }

    for (const auto& b : branches) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            best = std::min(best, std::abs(lambda(i).real() + b.omega));
        if (best > kPairTolerance * b.omega + floor) {
            std::ostringstream msg;
            msg << "spectrum is not ±-paired at " << to_thz(b.omega) << " THz";
            throw NumericalError(msg.str());
        }
    }

    std::sort(branches.begin(), branches.end(),
              [](const Branch& a, const Branch& b) { return a.omega < b.omega; });

    // Degenerate clusters.
    for (std::size_t start = 0; start < branches.size();) {
        std::size_t stop = start + 1;
        while (stop < branches.size() &&
               branches[stop].omega - branches[start].omega <= kDegeneracyTolerance * branches[stop].omega)
            ++stop;
        if (stop - start > 1) {
            std::vector<Eigen::VectorXcd> cluster;
            for (std::size_t k = start; k < stop; ++k)
                cluster.push_back(branches[k].vec);
            auto rebased = rebase_cluster(cluster, n);
            for (std::size_t k = start; k < stop; ++k)
                branches[k].vec = std::move(rebased[k - start]);
        }
        for (std::size_t k = start; k < stop; ++k) {
            auto& b = branches[k];
            fix_phase(b.vec, n);
            const Eigen::VectorXd frac = b.vec.head(n).cwiseAbs2() - b.vec.tail(n).cwiseAbs2();
            b.photon_fraction = frac.head(h.n_photon).sum();
            frac.maxCoeff(&b.dominant);
        }
        std::stable_sort(branches.begin() + static_cast<std::ptrdiff_t>(start),
                         branches.begin() + static_cast<std::ptrdiff_t>(stop),
                         [](const Branch& a, const Branch& b) {
                             if (std::abs(a.photon_fraction - b.photon_fraction) > 1e-9)
                                 return a.photon_fraction > b.photon_fraction;
                             return a.dominant < b.dominant;
                         });
        start = stop;
    }

    EigenSolution sol;
    sol.n_photon = h.n_photon;
    sol.frequencies.resize(n);
    sol.hopfield_x.resize(n, n);
    sol.hopfield_y.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& b = branches[static_cast<std::size_t>(k)];
        sol.frequencies(k) = to_thz(b.omega);
        sol.hopfield_x.row(k) = b.vec.head(n).transpose();
        sol.hopfield_y.row(k) = b.vec.tail(n).transpose();
    }
    sol.fractions = hopfield_fractions(sol);
    return sol;
}

Eigen::MatrixXd hopfield_fractions(const EigenSolution& sol) {
    return sol.hopfield_x.cwiseAbs2() - sol.hopfield_y.cwiseAbs2();
}

} // namespace polariton
