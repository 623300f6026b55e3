#include "smobank/design.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace smobank {

namespace {

constexpr double kInfiniteZero = 1e8;
constexpr double kTransformTol = 1e-9;

void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw Error(ErrorCode::InvalidArgument, msg);
    }
}

void validate_poles(const std::vector<Complex>& poles, Eigen::Index expected) {
    require(static_cast<Eigen::Index>(poles.size()) == expected,
            "expected " + std::to_string(expected) + " poles, got " + std::to_string(poles.size()));
    for (const auto& s : poles) {
        require(std::isfinite(s.real()) && std::isfinite(s.imag()), "non-finite pole");
        require(s.real() < 0.0, "requested pole is not in the open left half-plane");
        if (s.imag() != 0.0) {
            const auto conj = std::conj(s);
            const bool found = std::any_of(poles.begin(), poles.end(), [&](const Complex& o) {
                return std::abs(o - conj) <= 1e-12 * std::max(1.0, std::abs(s));
            });
            require(found, "pole set is not closed under conjugation");
        }
    }
}

// Eigenvalues of a defective cluster of multiplicity m are only computable to
// about eps^(1/m) * ||M||, so the spectrum comparison is loosened for repeated
// poles and backed by the residual of the target characteristic polynomial.
bool spectrum_placed(const Mat& M, const std::vector<Complex>& poles, double tol) {
    std::size_t mult = 1;
    for (const auto& s : poles) {
        const auto m = std::count_if(poles.begin(), poles.end(), [&](const Complex& o) { return o == s; });
        mult = std::max(mult, static_cast<std::size_t>(m));
    }
    const double norm = M.norm();
    const double loose = mult == 1 ? tol : std::max(tol, 10.0 * std::pow(1e-16, 1.0 / double(mult)) * norm);
    if (spectrum_mismatch(eig(M), poles) > loose) return false;

    const auto k = M.rows();
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(k, k);
    double bound = 1.0;
    for (const auto& s : poles) {
        P = P * (M.cast<Complex>() - s * Eigen::MatrixXcd::Identity(k, k));
        bound *= norm + std::abs(s);
    }
    return P.norm() <= 1e-10 * bound;
}

// Real matrix whose spectrum is the requested pole set. Repeated values are
// chained into Jordan blocks so the Sylvester route stays exact.
Mat target_matrix(std::vector<Complex> poles) {
    std::sort(poles.begin(), poles.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    const auto k = static_cast<Eigen::Index>(poles.size());
    Mat T = Mat::Zero(k, k);
    Eigen::Index i = 0;
    Complex prev{std::nan(""), 0.0};
    Eigen::Index prev_size = 0;
    for (std::size_t idx = 0; idx < poles.size();) {
        const Complex s = poles[idx];
        if (s.imag() == 0.0) {
            T(i, i) = s.real();
            if (prev_size == 1 && prev == s) {
                T(i - 1, i) = 1.0;
            }
            prev = s;
            prev_size = 1;
            i += 1;
            idx += 1;
        } else {
            // sorted by (real, imag): a pair's negative member comes first
            if (s.imag() < 0.0) {
                idx += 1;
                continue;
            }
            const double a = s.real();
            const double b = s.imag();
            T(i, i) = a;
            T(i, i + 1) = b;
            T(i + 1, i) = -b;
            T(i + 1, i + 1) = a;
            if (prev_size == 2 && prev == s) {
                T.block(i - 2, i, 2, 2).setIdentity();
            }
            prev = s;
            prev_size = 2;
            i += 2;
            idx += 1;
        }
    }
    return T;
}

} // namespace

UncertainSystem::UncertainSystem(Mat A, Mat B, Mat C, Mat D, double xi_bar)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)), xi_bar_(xi_bar) {
    const auto n = A_.rows();
    require(n > 0 && A_.cols() == n, "A must be square and non-empty");
    require(B_.rows() == n, "B must have n rows");
    require(C_.cols() == n && C_.rows() > 0, "C must be p x n with p > 0");
    require(D_.rows() == n && D_.cols() > 0, "D must be n x q with q > 0");
    require(C_.rows() <= n, "p must not exceed n");
    require(C_.rows() >= D_.cols(), "p >= q is required");
    require(std::isfinite(xi_bar_) && xi_bar_ >= 0.0, "xi_bar must be finite and >= 0");
    require(all_finite(A_) && all_finite(B_) && all_finite(C_) && all_finite(D_), "non-finite plant matrix");
    require(rank(C_) == static_cast<std::size_t>(C_.rows()), "C must have full row rank");
    require(rank(D_) == static_cast<std::size_t>(D_.cols()), "D must have full column rank");
    if (B_.size() > 0 && B_.norm() > 0.0) {
        require(rank(B_) == static_cast<std::size_t>(B_.cols()), "B must have full column rank");
    }
}

bool is_observable(const Mat& A, const Mat& C, double rank_tol) {
    const auto n = A.rows();
    const auto p = C.rows();
    Mat O(n * p, n);
    Mat block = C;
    for (Eigen::Index k = 0; k < n; ++k) {
        O.middleRows(k * p, p) = block;
        block = block * A;
    }
    return rank(O, rank_tol) == static_cast<std::size_t>(n);
}

std::vector<Complex> invariant_zeros(const Mat& A, const Mat& D, const Mat& C) {
    const auto n = A.rows();
    const auto q = D.cols();
    const auto p = C.rows();

    // Square the pencil by compressing the outputs; candidates are then
    // confirmed against the full (tall) Rosenbrock matrix.
    Mat Cq = C;
    if (p > q) {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> dist;
        Mat W(q, p);
        for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = dist(rng);
        Cq = W * C;
    }
    Mat M = Mat::Zero(n + q, n + q);
    M.topLeftCorner(n, n) = A;
    M.topRightCorner(n, q) = -D;
    M.bottomLeftCorner(q, n) = Cq;
    Mat N = Mat::Zero(n + q, n + q);
    N.topLeftCorner(n, n).setIdentity();

    Eigen::GeneralizedEigenSolver<Mat> ges(M, N, false);
    std::vector<Complex> zeros;
    const auto alphas = ges.alphas();
    const auto betas = ges.betas();
    for (Eigen::Index i = 0; i < alphas.size(); ++i) {
        if (std::abs(betas(i)) <= 1e-14 * std::abs(alphas(i)) || betas(i) == 0.0) {
            continue;
        }
        const Complex s = alphas(i) / betas(i);
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()) || std::abs(s) > kInfiniteZero) {
            continue;
        }
        if (p > q) {
            Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n + p, n + q);
            R.topLeftCorner(n, n) = s * Eigen::MatrixXcd::Identity(n, n) - A.cast<Complex>();
            R.topRightCorner(n, q) = D.cast<Complex>();
            R.bottomLeftCorner(p, n) = C.cast<Complex>();
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(R);
            const auto& sv = svd.singularValues();
            if (sv(sv.size() - 1) > 1e-7 * sv(0)) {
                continue;
            }
        }
        zeros.push_back(s);
    }
    return zeros;
}

FeasibilityReport check_existence(const UncertainSystem& sys, double rank_tol) {
    FeasibilityReport r;
    r.q = static_cast<std::size_t>(sys.q());
    r.rank_cd = rank(sys.C() * sys.D(), rank_tol);
    r.rank_ok = r.rank_cd == r.q;
    r.observable = is_observable(sys.A(), sys.C(), rank_tol);
    if (r.observable) {
        r.zeros_vacuous = true;
        r.zeros_ok = true;
    } else {
        r.invariant_zeros = invariant_zeros(sys.A(), sys.D(), sys.C());
        r.zeros_ok = std::all_of(r.invariant_zeros.begin(), r.invariant_zeros.end(),
                                 [](const Complex& s) { return s.real() < 0.0; });
    }
    r.pass = r.rank_ok && r.zeros_ok;
    return r;
}

CanonicalForm canonical_from_transform(const UncertainSystem& sys, const Mat& J) {
    const auto n = sys.n();
    const auto p = sys.p();
    const auto q = sys.q();
    const auto r = n - p;
    if (J.rows() != n || J.cols() != n) {
        throw Error(ErrorCode::BadTransform, "J must be n x n");
    }
    CanonicalForm cf;
    cf.J = J;
    try {
        cf.J_inv = solve_linear(J, Mat::Identity(n, n));
    } catch (const Error&) {
        throw Error(ErrorCode::BadTransform, "J is singular");
    }
    cf.A_full = J * sys.A() * cf.J_inv;
    cf.D_full = J * sys.D();
    cf.C_full = sys.C() * cf.J_inv;
    const Mat B_full = J * sys.B();

    cf.A11 = cf.A_full.topLeftCorner(r, r);
    cf.A12 = cf.A_full.topRightCorner(r, p);
    cf.A21 = cf.A_full.bottomLeftCorner(p, r);
    cf.A22 = cf.A_full.bottomRightCorner(p, p);
    cf.B1 = B_full.topRows(r);
    cf.B2 = B_full.bottomRows(p);
    cf.D2 = cf.D_full.bottomRows(p);

    Mat C_target = Mat::Zero(p, n);
    C_target.rightCols(p).setIdentity();
    if ((cf.C_full - C_target).cwiseAbs().maxCoeff() > kTransformTol) {
        throw Error(ErrorCode::BadTransform, "C J^-1 differs from [0 | I_p]");
    }
    if (r > 0 && cf.D_full.topRows(r).cwiseAbs().maxCoeff() > kTransformTol * std::max(1.0, sys.D().norm())) {
        throw Error(ErrorCode::BadTransform, "J D has a non-zero top block");
    }
    if (rank(cf.D2) != static_cast<std::size_t>(q)) {
        throw Error(ErrorCode::BadTransform, "rank(D2) < q");
    }
    if (r > 0 && !is_hurwitz(cf.A11)) {
        throw Error(ErrorCode::BadTransform, "A11 is not Hurwitz");
    }
    return cf;
}

Mat stabilize(const Mat& A11, const Mat& A21, const std::vector<Complex>& poles, std::uint64_t seed) {
    const auto k = A11.rows();
    const auto r = A21.rows();
    require(A11.cols() == k && A21.cols() == k, "stabilize: dimension mismatch");
    validate_poles(poles, k);

    double scale = 1.0;
    for (const auto& s : poles) scale = std::max(scale, std::abs(s));
    const double tol = 1e-6 * scale;

    if (k == 0 || spectrum_placed(A11, poles, tol)) {
        return Mat::Zero(k, r);
    }
    if (r == 0) {
        throw Error(ErrorCode::PlacementFailure, "no injection freedom to move the A11 modes");
    }

    // Dual problem: eig(Ad + Bd F) = poles with Ad = A11^T, Bd = A21^T, L = F^T.
    const Mat Ad = A11.transpose();
    const Mat Bd = A21.transpose();
    const Mat Lambda = target_matrix(poles);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    auto random = [&](Eigen::Index rows, Eigen::Index cols) {
        Mat M(rows, cols);
        for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = dist(rng);
        return M;
    };

    for (int attempt = 0; attempt < 8; ++attempt) {
        // Later attempts pre-shift the spectrum with a random feedback so that
        // it no longer meets the target spectrum.
        const Mat F0 = attempt == 0 ? Mat::Zero(r, k) : Mat(random(r, k) * (scale / std::sqrt(double(r * k))));
        const Mat As = Ad + Bd * F0;
        const Mat G = random(r, k);
        try {
            // As X - X Lambda = -Bd G
            const Mat X = solve_sylvester(As, -Lambda, -Bd * G);
            const Mat F1 = solve_linear(X.transpose(), G.transpose()).transpose();
            const Mat L = (F0 + F1).transpose();
            if (all_finite(L) && spectrum_placed(A11 + L * A21, poles, tol)) {
                return L;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularMatrix) throw;
        }
    }
    throw Error(ErrorCode::PlacementFailure, "requested A11 poles could not be assigned");
}

CanonicalForm to_canonical(const UncertainSystem& sys, const std::vector<Complex>& desired_A11_poles,
                           const std::optional<Mat>& J_override, std::uint64_t seed) {
    if (J_override) {
        return canonical_from_transform(sys, *J_override);
    }
    const auto n = sys.n();
    const auto p = sys.p();
    const auto q = sys.q();
    const auto r = n - p;
    validate_poles(desired_A11_poles, r);

    // Stage 1: [N^T; C] with N an orthonormal basis of null(C).
    Mat T0(n, n);
    T0.topRows(r) = null_space(sys.C()).transpose();
    T0.bottomRows(p) = sys.C();
    const Mat T0_inv = solve_linear(T0, Mat::Identity(n, n));
    const Mat A1 = T0 * sys.A() * T0_inv;
    const Mat D1 = T0 * sys.D();
    const Mat Dtop = D1.topRows(r);
    const Mat D2 = D1.bottomRows(p);
    if (rank(D2) != static_cast<std::size_t>(q)) {
        throw Error(ErrorCode::PlacementFailure, "rank(CD) < q: no canonical form exists");
    }

    // Stage 2: x_I <- x_I + L y. L = L0 + K N2^T where L0 cancels the top
    // block of D and K (acting through the left null space of D2) places the
    // A11 poles.
    const Mat D2_pinv = solve_linear(D2.transpose() * D2, D2.transpose());
    const Mat L0 = -Dtop * D2_pinv;
    const Mat A11 = A1.topLeftCorner(r, r);
    const Mat A21 = A1.bottomLeftCorner(p, r);
    const Mat N2 = null_space(D2.transpose()); // p x (p - q)
    const Mat A11_shift = A11 + L0 * A21;
    const Mat A21_free = N2.transpose() * A21;
    const Mat K = stabilize(A11_shift, A21_free, desired_A11_poles, seed);
    const Mat L = L0 + K * N2.transpose();

    Mat T2 = Mat::Identity(n, n);
    T2.topRightCorner(r, p) = L;
    return canonical_from_transform(sys, T2 * T0);
}

ConvergenceDiagnostics convergence_diagnostics(const Mat& A0) {
    const auto n = A0.rows();
    ConvergenceDiagnostics d;
    d.P0 = solve_lyapunov(A0, Mat::Identity(n, n));
    const Vec ev = symmetric_eigenvalues(d.P0);
    const double lmin = ev(0);
    const double lmax = ev(ev.size() - 1);
    d.k = std::sqrt(static_cast<double>(n) * lmax / lmin);
    d.lambda = 1.0 / (2.0 * lmax);
    return d;
}

Mat default_Q2(Eigen::Index p) {
    return 20.0 * Mat::Identity(p, p);
}

ObserverGains design_gains(const UncertainSystem& sys, const CanonicalForm& cf, const Mat& A22s, const Mat& Q2,
                           double rho, double delta, double gamma0_min) {
    const auto n = sys.n();
    const auto p = sys.p();
    const auto r = n - p;
    require(A22s.rows() == p && A22s.cols() == p, "A22s must be p x p");
    require(Q2.rows() == p && Q2.cols() == p, "Q2 must be p x p");
    require(std::isfinite(delta) && delta >= 0.0, "delta must be >= 0");
    require(gamma0_min > 0.0, "gamma0 margin must be positive");
    if (!(rho - sys.xi_bar() >= gamma0_min)) {
        throw Error(ErrorCode::InsufficientGain, "rho must exceed xi_bar by at least " + std::to_string(gamma0_min));
    }

    ObserverGains g;
    g.A22s = A22s;
    g.Q2 = Q2;
    g.P2 = solve_lyapunov(A22s, Q2); // NotHurwitz / BadQ propagate
    g.rho = rho;
    g.delta = delta;
    g.gamma0 = rho - sys.xi_bar();

    Mat Gl_can(n, p);
    Gl_can.topRows(r) = cf.A12;
    Gl_can.bottomRows(p) = cf.A22 - A22s;
    Mat Gn_can = Mat::Zero(n, p);
    Gn_can.bottomRows(p) = spectral_norm(cf.D2) * Mat::Identity(p, p);

    g.Gl = cf.J_inv * Gl_can;
    g.Gn = cf.J_inv * Gn_can;
    g.A0 = sys.A() - g.Gl * sys.C();
    g.diagnostics = convergence_diagnostics(g.A0);
    return g;
}

} // namespace smobank
