#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "smobank/error.hpp"

// Small dense-matrix kernel shared by the design, bank and simulation code.
// Everything here is sized for state dimensions of a few dozen at most.
namespace smobank {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Complex = std::complex<double>;

inline constexpr double kDefaultRankTol = 1e-9;
inline constexpr double kPivotTol = 1e-12;

// Solves A X = B by LU with partial pivoting. Throws SingularMatrix when a
// pivot drops below 1e-12 * ||A||_F.
[[nodiscard]] Mat solve_linear(const Mat& A, const Mat& B);

// Numerical rank: number of pivots larger than tol * ||M||_F found by row
// reduction with partial pivoting.
[[nodiscard]] std::size_t rank(const Mat& M, double tol = kDefaultRankTol);

// All eigenvalues (with multiplicity) via Hessenberg reduction and shifted QR.
// The sweep budget is 100 * n; exhausting it throws EigFailure.
[[nodiscard]] std::vector<Complex> eig(const Mat& M);

// Solves P As + As^T P + Q = 0 for symmetric positive-definite P, by direct
// solution of the vectorized (n^2 x n^2) system.
[[nodiscard]] Mat solve_lyapunov(const Mat& As, const Mat& Q);

// Largest singular value by power iteration on M^T M.
[[nodiscard]] double spectral_norm(const Mat& M);

// ---------------------------------------------------------------------------
// Helpers built on the kernel

[[nodiscard]] double max_real_part(const std::vector<Complex>& values);
[[nodiscard]] bool is_hurwitz(const Mat& M);

/// Eigenvalues of a symmetric matrix, ascending.
[[nodiscard]] Vec symmetric_eigenvalues(const Mat& S);

[[nodiscard]] Mat kron(const Mat& a, const Mat& b);

/// Orthonormal basis (as columns) of the right null space of M.
[[nodiscard]] Mat null_space(const Mat& M, double tol = kDefaultRankTol);

/// Solves A X + X B = C (Kronecker form). Throws SingularMatrix when the
/// spectra of A and -B intersect.
[[nodiscard]] Mat solve_sylvester(const Mat& A, const Mat& B, const Mat& C);

[[nodiscard]] bool all_finite(const Mat& M);

/// Largest distance between paired entries of two spectra, pairing greedily by
/// nearest value. Returns +inf when the sizes differ.
[[nodiscard]] double spectrum_mismatch(std::vector<Complex> got, std::vector<Complex> want);

struct NnlsResult {
    Vec x;
    double residual = 0.0; // ||A x - b||_2
    int iterations = 0;
};

// Lawson-Hanson active-set nonnegative least squares: min ||A x - b||, x >= 0.
[[nodiscard]] NnlsResult nnls(const Mat& A, const Vec& b);

} // namespace smobank
