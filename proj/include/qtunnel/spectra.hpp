#pragma once

// Exact diagonalization of H within each total-spin sector, for small N.

#include "qtunnel/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace qtunnel {

/// Number of spin-S multiplets among N spins-1/2; exact for n <= 64.
/// Throws Parity when two_s and n differ in parity, Domain when two_s is out of [0, n].
std::uint64_t multiplicity(int n, int two_s);

/// Symmetric tridiagonal H restricted to spin S, basis M = -S..S.
struct SectorHamiltonian {
    Eigen::VectorXd diagonal;     // -N g(2M/N)
    Eigen::VectorXd off_diagonal;  // (M, M+1): -Γ sqrt((S+M+1)(S-M))
};

SectorHamiltonian sector_hamiltonian(int n, int two_s, const ModelSpec& model);

struct SectorSpectrum {
    int n_spins = 0;
    int two_s = 0;
    std::uint64_t multiplicity = 0;
    Eigen::VectorXd eigenvalues;   // ascending, extensive units
    Eigen::MatrixXd eigenvectors;  // columns, rows indexed by M + S
};

SectorSpectrum sector_spectrum(int n, int two_s, const ModelSpec& model);

/// Every sector 2S = n, n-2, ..., n mod 2.
std::vector<SectorSpectrum> full_spectrum(int n, const ModelSpec& model);

inline constexpr int max_exact_spins = 20;

/// P(M) for M = -N/2..N/2 (index M + N/2) of a fixed imaginary-time slice in
/// the Gibbs state. Throws Size for n > max_exact_spins.
std::vector<double> equilibrium_mz_distribution(int n, const ModelSpec& model, double beta);

/// -ln Z / (β N). Throws Size for n > max_exact_spins.
double free_energy_exact(int n, const ModelSpec& model, double beta);

}  // namespace qtunnel
