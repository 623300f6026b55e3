#include "smobank/bank.hpp"

#include <cmath>

namespace smobank {

namespace {

// Observer right-hand side shared by every bank member and the single SMO.
Mat observer_rhs(const Mat& xhat, const ObserverGains& g, const UncertainSystem& sys, const Vec& u, const Vec& y,
                 const Vec& nu) {
    Mat out = sys.A() * xhat - g.Gl * ((sys.C() * xhat).colwise() - y);
    Vec drive = g.Gn * nu;
    if (sys.m() > 0) {
        drive += sys.B() * u;
    }
    out.colwise() += drive;
    return out;
}

Vec shared_injection(const Mat& xhat, const Vec& alpha_bar, const ObserverGains& g, const UncertainSystem& sys,
                     const Vec& y) {
    const Vec y_tilde_o = sys.C() * combined_estimate(xhat, alpha_bar) - y;
    return injection(g.P2, y_tilde_o, g.rho, g.delta);
}

} // namespace

HullWitness hull_witness(const Mat& vertices, const Vec& x) {
    if (vertices.rows() != x.size() || vertices.cols() == 0) {
        throw Error(ErrorCode::InvalidArgument, "hull_witness: dimension mismatch");
    }
    const auto n = vertices.rows();
    const auto N = vertices.cols();
    const double s = std::max(1.0, vertices.cwiseAbs().maxCoeff());
    Mat A(n + 1, N);
    A.topRows(n) = vertices;
    A.row(n).setConstant(s);
    Vec b(n + 1);
    b.head(n) = x;
    b(n) = s;

    const NnlsResult sol = nnls(A, b);
    HullWitness w;
    w.alpha = sol.x;
    w.residual = (vertices * w.alpha - x).norm();
    w.sum_error = std::abs(w.alpha.sum() - 1.0);
    w.inside = w.residual <= kHullTol && w.sum_error <= kHullTol;
    return w;
}

void require_in_hull(const HullWitness& w) {
    if (!w.inside) {
        throw Error(ErrorCode::HullViolation, "x(0) is outside the convex hull of the observer initial states "
                                              "(residual " + std::to_string(w.residual) + ")");
    }
}

void validate_bank_config(const BankConfig& cfg, Eigen::Index n) {
    const auto N = cfg.size();
    if (cfg.initial_states.rows() != n) {
        throw Error(ErrorCode::InvalidArgument, "initial states must have n rows");
    }
    if (N < n + 1) {
        throw Error(ErrorCode::InvalidArgument, "bank needs N >= n + 1 observers");
    }
    if (cfg.alpha0.size() != N - 1) {
        throw Error(ErrorCode::InvalidArgument, "alpha0 must have N - 1 entries");
    }
    if (!(std::isfinite(cfg.mu) && cfg.mu > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mu must be positive");
    }
    if (!all_finite(cfg.initial_states) || !all_finite(cfg.alpha0)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite bank configuration");
    }
    if (!cfg.allow_degenerate && rank(e_matrix(cfg.initial_states)) != static_cast<std::size_t>(n)) {
        throw Error(ErrorCode::DegenerateBank, "E(0) does not have rank n");
    }
}

BankInit init_bank(const UncertainSystem& sys, const BankConfig& cfg, const std::optional<Vec>& x0_hint) {
    validate_bank_config(cfg, sys.n());
    BankInit init;
    const auto Nm1 = cfg.size() - 1;
    init.state.xhat = cfg.initial_states;
    init.state.alpha_bar = cfg.alpha0;
    init.state.R = cfg.mu * Mat::Identity(Nm1, Nm1);
    init.state.t = 0.0;
    if (x0_hint) {
        init.witness = hull_witness(cfg.initial_states, *x0_hint);
    }
    return init;
}

Mat auto_hull_vertices(Eigen::Index n, Eigen::Index N, double state_bound) {
    if (!(state_bound > 0.0) || N < n + 1 || N > 2 * n + 1) {
        throw Error(ErrorCode::InvalidArgument, "auto hull needs state_bound > 0 and n+1 <= N <= 2n+1");
    }
    // the closest facet of {r e_j, -r 1} sits at r / sqrt(n^2 + n - 1) from the origin
    const auto nd = static_cast<double>(n);
    const double r = state_bound * std::sqrt(nd * nd + nd);
    Mat all(n, 2 * n + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        all.col(j) = r * Vec::Unit(n, j);
        all.col(n + 1 + j) = -r * Vec::Unit(n, j);
    }
    all.col(n) = -r * Vec::Ones(n);
    return all.leftCols(N);
}

Vec full_weights(const Vec& alpha_bar) {
    Vec w(alpha_bar.size() + 1);
    w.head(alpha_bar.size()) = alpha_bar;
    w(alpha_bar.size()) = 1.0 - alpha_bar.sum();
    return w;
}

bool weights_in_simplex(const Vec& alpha_bar, double tol) {
    const Vec w = full_weights(alpha_bar);
    return (w.array() >= -tol).all() && (w.array() <= 1.0 + tol).all();
}

Vec combined_estimate(const Mat& xhat, const Vec& alpha_bar) {
    const auto N = xhat.cols();
    const Vec last = xhat.col(N - 1);
    return xhat.leftCols(N - 1) * alpha_bar + (1.0 - alpha_bar.sum()) * last;
}

Vec combined_estimate(const BankState& state) {
    return combined_estimate(state.xhat, state.alpha_bar);
}

Mat e_matrix(const Mat& xhat) {
    const auto N = xhat.cols();
    return xhat.leftCols(N - 1).colwise() - xhat.col(N - 1);
}

Mat e_matrix(const BankState& state) {
    return e_matrix(state.xhat);
}

Vec injection(const Mat& P2, const Vec& y_tilde, double rho, double delta) {
    const Vec s = P2 * y_tilde;
    const double ns = s.norm();
    if (delta > 0.0) {
        return -rho * s / (ns + delta);
    }
    if (ns == 0.0) {
        return Vec::Zero(s.size());
    }
    return -rho * s / ns;
}

BankDerivative bank_derivative(const BankState& state, const ObserverGains& gains, const UncertainSystem& sys,
                               const Vec& u, const Vec& y) {
    const Vec nu = shared_injection(state.xhat, state.alpha_bar, gains, sys, y);
    BankDerivative d;
    d.dxhat = observer_rhs(state.xhat, gains, sys, u, y, nu);

    const Mat CE = sys.C() * e_matrix(state);
    const Vec y_tilde_N = sys.C() * state.xhat.col(state.xhat.cols() - 1) - y;
    const Mat RCEt = state.R * CE.transpose();
    d.dalpha = -RCEt * (CE * state.alpha_bar + y_tilde_N);
    d.dR = -RCEt * CE * state.R;
    return d;
}

InformationState to_information(const Vec& alpha_bar, const Mat& R) {
    InformationState info;
    info.S = solve_linear(R, Mat::Identity(R.rows(), R.cols()));
    info.S = 0.5 * (info.S + info.S.transpose());
    info.z = info.S * alpha_bar;
    return info;
}

Vec alpha_from_information(const InformationState& info) {
    Eigen::LLT<Mat> llt(info.S);
    if (llt.info() != Eigen::Success) {
        return solve_linear(info.S, info.z);
    }
    return llt.solve(info.z);
}

Mat covariance_from_information(const InformationState& info) {
    const auto k = info.S.rows();
    Eigen::LLT<Mat> llt(info.S);
    Mat R = llt.info() == Eigen::Success ? Mat(llt.solve(Mat::Identity(k, k)))
                                         : solve_linear(info.S, Mat::Identity(k, k));
    return 0.5 * (R + R.transpose());
}

InformationDerivative information_derivative(const Mat& xhat, const InformationState& info,
                                             const ObserverGains& gains, const UncertainSystem& sys, const Vec& u,
                                             const Vec& y) {
    const Vec alpha_bar = alpha_from_information(info);
    const Vec nu = shared_injection(xhat, alpha_bar, gains, sys, y);
    InformationDerivative d;
    d.dxhat = observer_rhs(xhat, gains, sys, u, y, nu);

    const Mat CE = sys.C() * e_matrix(xhat);
    const Vec y_tilde_N = sys.C() * xhat.col(xhat.cols() - 1) - y;
    d.dS = CE.transpose() * CE;
    d.dz = -CE.transpose() * y_tilde_N;
    return d;
}

Vec smo_derivative(const Vec& xhat, const ObserverGains& gains, const UncertainSystem& sys, const Vec& u,
                   const Vec& y) {
    const Vec nu = injection(gains.P2, sys.C() * xhat - y, gains.rho, gains.delta);
    return observer_rhs(xhat, gains, sys, u, y, nu).col(0);
}

} // namespace smobank
