#include "qtunnel/spectra.hpp"

#include "qtunnel/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace qtunnel {

namespace {

unsigned __int128 binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    return c;
}

void check_sector(int n, int two_s) {
    if (n < 1 || n > 64) throw Error(ErrorCode::Size, "spin count must be in [1, 64], got " + std::to_string(n));
    if (two_s < 0 || two_s > n) throw Error(ErrorCode::Domain, "2S must be in [0, N]");
    if ((n - two_s) % 2 != 0) throw Error(ErrorCode::Parity, "2S and N must have equal parity");
}

void check_exact(int n, double beta) {
    if (n < 1 || n > max_exact_spins)
        throw Error(ErrorCode::Size, "exact sums need 1 <= N <= " + std::to_string(max_exact_spins) + ", got " + std::to_string(n));
    if (!(beta >= 0.0)) throw Error(ErrorCode::Domain, "beta must be non-negative");
}

}  // namespace

std::uint64_t multiplicity(int n, int two_s) {
    check_sector(n, two_s);
    int k = (n - two_s) / 2;  // N/2 - S
    return static_cast<std::uint64_t>(binomial(n, k) - binomial(n, k - 1));
}

SectorHamiltonian sector_hamiltonian(int n, int two_s, const ModelSpec& model) {
    check_sector(n, two_s);
    const int dim = two_s + 1;
    SectorHamiltonian h;
    h.diagonal.resize(dim);
    h.off_diagonal.resize(dim - 1);
    const double s = 0.5 * two_s;
    for (int i = 0; i < dim; ++i) {
        double mm = -s + i;
        h.diagonal[i] = -n * model.g(2.0 * mm / n);
        if (i + 1 < dim) h.off_diagonal[i] = -model.gamma() * std::sqrt((s + mm + 1.0) * (s - mm));
    }
    return h;
}

SectorSpectrum sector_spectrum(int n, int two_s, const ModelSpec& model) {
    auto h = sector_hamiltonian(n, two_s, model);
    SectorSpectrum out;
    out.n_spins = n;
    out.two_s = two_s;
    out.multiplicity = multiplicity(n, two_s);
    if (two_s == 0) {
        out.eigenvalues = h.diagonal;
        out.eigenvectors = Eigen::MatrixXd::Identity(1, 1);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(h.diagonal, h.off_diagonal, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NonConverged, "tridiagonal eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
    return out;
}

std::vector<SectorSpectrum> full_spectrum(int n, const ModelSpec& model) {
    std::vector<SectorSpectrum> out;
    for (int two_s = n; two_s >= 0; two_s -= 2) out.push_back(sector_spectrum(n, two_s, model));
    return out;
}

std::vector<double> equilibrium_mz_distribution(int n, const ModelSpec& model, double beta) {
    check_exact(n, beta);
    auto sectors = full_spectrum(n, model);
    double e0 = INFINITY;
    for (const auto& sp : sectors) e0 = std::min(e0, sp.eigenvalues.minCoeff());
    std::vector<double> p(n + 1, 0.0);
    for (const auto& sp : sectors) {
        Eigen::ArrayXd w = (-beta * (sp.eigenvalues.array() - e0)).exp();
        // diagonal of e^{-β(H - e0)} in the M basis
        Eigen::VectorXd diag = sp.eigenvectors.array().square().matrix() * w.matrix();
        const int offset = (n - sp.two_s) / 2;
        for (int i = 0; i <= sp.two_s; ++i) p[offset + i] += static_cast<double>(sp.multiplicity) * diag[i];
    }
    double z = 0.0;
    for (double x : p) z += x;
    for (double& x : p) x /= z;
    return p;
}

double free_energy_exact(int n, const ModelSpec& model, double beta) {
    check_exact(n, beta);
    if (beta == 0.0) throw Error(ErrorCode::Domain, "free energy needs beta > 0");
    auto sectors = full_spectrum(n, model);
    double e0 = INFINITY;
    for (const auto& sp : sectors) e0 = std::min(e0, sp.eigenvalues.minCoeff());
    double z = 0.0;
    for (const auto& sp : sectors)
        z += static_cast<double>(sp.multiplicity) * (-beta * (sp.eigenvalues.array() - e0)).exp().sum();
    return (e0 - std::log(z) / beta) / n;
}

}  // namespace qtunnel
