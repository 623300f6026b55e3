#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "smobank/matkit.hpp"

namespace smobank {

// Plant  x' = A x + B u + D xi(t, x, u),  y = C x,  with ||xi|| <= xi_bar.
//
// B may be identically zero (an unactuated plant); otherwise B, C and D must
// have full rank. p >= q is required.
class UncertainSystem {
public:
    UncertainSystem(Mat A, Mat B, Mat C, Mat D, double xi_bar);

    [[nodiscard]] const Mat& A() const noexcept { return A_; }
    [[nodiscard]] const Mat& B() const noexcept { return B_; }
    [[nodiscard]] const Mat& C() const noexcept { return C_; }
    [[nodiscard]] const Mat& D() const noexcept { return D_; }
    [[nodiscard]] double xi_bar() const noexcept { return xi_bar_; }

    [[nodiscard]] Eigen::Index n() const noexcept { return A_.rows(); }
    [[nodiscard]] Eigen::Index m() const noexcept { return B_.cols(); }
    [[nodiscard]] Eigen::Index p() const noexcept { return C_.rows(); }
    [[nodiscard]] Eigen::Index q() const noexcept { return D_.cols(); }

private:
    Mat A_, B_, C_, D_;
    double xi_bar_;
};

struct FeasibilityReport {
    std::size_t rank_cd = 0;
    std::size_t q = 0;
    bool rank_ok = false;
    bool observable = false;
    // True when observability of (A, C) makes the invariant-zero test moot.
    bool zeros_vacuous = false;
    std::vector<Complex> invariant_zeros;
    bool zeros_ok = false;
    bool pass = false;
};

// Observer existence conditions: rank(CD) = q and every invariant zero of
// (A, D, C) in the open left half-plane.
[[nodiscard]] FeasibilityReport check_existence(const UncertainSystem& sys, double rank_tol = kDefaultRankTol);

[[nodiscard]] bool is_observable(const Mat& A, const Mat& C, double rank_tol = kDefaultRankTol);

// Finite values s where [sI - A, D; C, 0] loses column rank.
[[nodiscard]] std::vector<Complex> invariant_zeros(const Mat& A, const Mat& D, const Mat& C);

// Coordinates z = J x in which  C J^-1 = [0 | I_p],  J D = [0; D2],  and the
// unobserved block A11 is Hurwitz.
struct CanonicalForm {
    Mat J;
    Mat J_inv;
    Mat A_full; // J A J^-1
    Mat A11, A12, A21, A22;
    Mat B1, B2;
    Mat D_full; // J D
    Mat C_full; // C J^-1
    Mat D2;
};

[[nodiscard]] CanonicalForm canonical_from_transform(const UncertainSystem& sys, const Mat& J);

[[nodiscard]] CanonicalForm to_canonical(const UncertainSystem& sys,
                                         const std::vector<Complex>& desired_A11_poles,
                                         const std::optional<Mat>& J_override = std::nullopt,
                                         std::uint64_t seed = 1);

// Output-injection L with eig(A11 + L A21) equal to the requested poles, by
// eigenvalue assignment on the dual pair (A11^T, A21^T) via a Sylvester
// equation.
[[nodiscard]] Mat stabilize(const Mat& A11, const Mat& A21, const std::vector<Complex>& poles,
                            std::uint64_t seed = 1);

struct ConvergenceDiagnostics {
    Mat P0;        // P0 A0 + A0^T P0 = -I
    double k;      // sqrt(n * lmax(P0) / lmin(P0))
    double lambda; // 1 / (2 lmax(P0))
};

// Constants of the bound ||exp(A0 t)|| <= k exp(-lambda t).
[[nodiscard]] ConvergenceDiagnostics convergence_diagnostics(const Mat& A0);

struct ObserverGains {
    Mat Gl;   // n x p linear output injection
    Mat Gn;   // n x p nonlinear injection
    Mat P2;   // p x p, P2 A22s + A22s^T P2 = -Q2
    Mat Q2;
    Mat A22s; // stable sliding-surface dynamics
    double rho = 0.0;
    double delta = 0.0; // boundary-layer width; 0 selects the discontinuous law
    double gamma0 = 0.0; // rho - xi_bar
    Mat A0; // A - Gl C
    ConvergenceDiagnostics diagnostics;
};

inline constexpr double kDefaultGammaMargin = 0.1;

[[nodiscard]] Mat default_Q2(Eigen::Index p);

[[nodiscard]] ObserverGains design_gains(const UncertainSystem& sys, const CanonicalForm& cf, const Mat& A22s,
                                         const Mat& Q2, double rho, double delta,
                                         double gamma0_min = kDefaultGammaMargin);

} // namespace smobank
