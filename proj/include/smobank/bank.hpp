#pragma once

#include <optional>

#include "smobank/design.hpp"

// Runtime of the N-observer bank: shared nonlinear injection, convex
// combination of the observer states, and the modified RLS law that adapts
// the combination weights.
namespace smobank {

struct BankConfig {
    Mat initial_states; // n x N, column i is xhat_i(0)
    Vec alpha0;         // first N-1 weights; the last is 1 - sum
    double mu = 100.0;  // R(0) = mu I
    // Skip the rank(E(0)) = n requirement, e.g. for a bank whose observers
    // all start at x(0).
    bool allow_degenerate = false;

    [[nodiscard]] Eigen::Index size() const noexcept { return initial_states.cols(); }
};

struct BankState {
    Mat xhat;      // n x N
    Vec alpha_bar; // N - 1
    Mat R;         // (N-1) x (N-1)
    double t = 0.0;
};

struct HullWitness {
    Vec alpha;             // N nonnegative weights
    double residual = 0.0; // ||sum alpha_i xhat_i(0) - x0||
    double sum_error = 0.0; // |sum alpha_i - 1|
    bool inside = false;
};

struct BankInit {
    BankState state;
    std::optional<HullWitness> witness;
};

inline constexpr double kHullTol = 1e-8;

// Searches for alpha >= 0, sum alpha = 1 with vertices * alpha = x by
// nonnegative least squares on the sum-augmented system.
[[nodiscard]] HullWitness hull_witness(const Mat& vertices, const Vec& x);

// Throws HullViolation for callers that need the perfect-estimation
// precondition enforced instead of reported.
void require_in_hull(const HullWitness& w);

void validate_bank_config(const BankConfig& cfg, Eigen::Index n);

[[nodiscard]] BankInit init_bank(const UncertainSystem& sys, const BankConfig& cfg,
                                 const std::optional<Vec>& x0_hint = std::nullopt);

// Vertices r e_1..r e_n, -r(1,...,1), -r e_1..-r e_n truncated to N points,
// r = 2 * state_bound. The first n+1 already form a simplex around 0.
[[nodiscard]] Mat auto_hull_vertices(Eigen::Index n, Eigen::Index N, double state_bound);

[[nodiscard]] Vec full_weights(const Vec& alpha_bar);
[[nodiscard]] bool weights_in_simplex(const Vec& alpha_bar, double tol = 1e-12);

[[nodiscard]] Vec combined_estimate(const Mat& xhat, const Vec& alpha_bar);
[[nodiscard]] Vec combined_estimate(const BankState& state);

// Column i is xhat_i - xhat_N.
[[nodiscard]] Mat e_matrix(const Mat& xhat);
[[nodiscard]] Mat e_matrix(const BankState& state);

// Boundary-layer injection -rho P2 e / (||P2 e|| + delta); delta = 0 gives the
// discontinuous unit-vector law with nu(0) = 0.
[[nodiscard]] Vec injection(const Mat& P2, const Vec& y_tilde, double rho, double delta);

struct BankDerivative {
    Mat dxhat;
    Vec dalpha;
    Mat dR;
};

[[nodiscard]] BankDerivative bank_derivative(const BankState& state, const ObserverGains& gains,
                                             const UncertainSystem& sys, const Vec& u, const Vec& y);

// The same adaptation written for S = R^-1 and z = R^-1 alpha_bar:
//   S' = E^T C^T C E,   z' = -E^T C^T (C xhat_N - y),   alpha_bar = S^-1 z.
// Algebraically identical to the covariance form but free of the 1/mu
// stiffness, which matters for large mu.
struct InformationState {
    Mat S;
    Vec z;
};

[[nodiscard]] InformationState to_information(const Vec& alpha_bar, const Mat& R);
[[nodiscard]] Vec alpha_from_information(const InformationState& info);
[[nodiscard]] Mat covariance_from_information(const InformationState& info);

struct InformationDerivative {
    Mat dxhat;
    Mat dS;
    Vec dz;
};

[[nodiscard]] InformationDerivative information_derivative(const Mat& xhat, const InformationState& info,
                                                           const ObserverGains& gains, const UncertainSystem& sys,
                                                           const Vec& u, const Vec& y);

// Conventional single sliding-mode observer.
[[nodiscard]] Vec smo_derivative(const Vec& xhat, const ObserverGains& gains, const UncertainSystem& sys,
                                 const Vec& u, const Vec& y);

} // namespace smobank
