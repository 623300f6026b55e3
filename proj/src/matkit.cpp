#include "smobank/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace smobank {

namespace {

void require_square(const Mat& M, const char* what) {
    if (M.rows() != M.cols()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be square");
    }
}

} // namespace

Mat solve_linear(const Mat& A, const Mat& B) {
    require_square(A, "solve_linear: A");
    if (B.rows() != A.rows()) {
        throw Error(ErrorCode::InvalidArgument, "solve_linear: B.rows() != A.rows()");
    }
    if (A.rows() == 0) {
        return B;
    }
    const double scale = A.norm();
    Eigen::PartialPivLU<Mat> lu(A);
    const auto& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        if (!(std::abs(U(i, i)) > kPivotTol * scale)) {
            throw Error(ErrorCode::SingularMatrix,
                        "pivot " + std::to_string(i) + " below tolerance in solve_linear");
        }
    }
    return lu.solve(B);
}

std::size_t rank(const Mat& M, double tol) {
    if (!(tol > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "rank: tol must be positive");
    }
    const double scale = M.norm();
    if (M.size() == 0 || scale == 0.0) {
        return 0;
    }
    Mat work = M;
    const Eigen::Index rows = work.rows();
    std::size_t r = 0;
    Eigen::Index pivot_row = 0;
    for (Eigen::Index c = 0; c < work.cols() && pivot_row < rows; ++c) {
        Eigen::Index best = pivot_row;
        for (Eigen::Index i = pivot_row + 1; i < rows; ++i) {
            if (std::abs(work(i, c)) > std::abs(work(best, c))) {
                best = i;
            }
        }
        if (std::abs(work(best, c)) <= tol * scale) {
            continue;
        }
        work.row(best).swap(work.row(pivot_row));
        for (Eigen::Index i = pivot_row + 1; i < rows; ++i) {
            const double f = work(i, c) / work(pivot_row, c);
            work.row(i) -= f * work.row(pivot_row);
        }
        ++pivot_row;
        ++r;
    }
    return r;
}

std::vector<Complex> eig(const Mat& M) {
    require_square(M, "eig: M");
    if (!all_finite(M)) {
        throw Error(ErrorCode::InvalidArgument, "eig: non-finite entry");
    }
    const auto n = M.rows();
    if (n == 0) {
        return {};
    }
    Eigen::EigenSolver<Mat> solver;
    solver.setMaxIterations(100 * n);
    solver.compute(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::EigFailure, "QR iteration did not converge");
    }
    const auto& values = solver.eigenvalues();
    return {values.data(), values.data() + values.size()};
}

Mat solve_lyapunov(const Mat& As, const Mat& Q) {
    require_square(As, "solve_lyapunov: As");
    require_square(Q, "solve_lyapunov: Q");
    if (Q.rows() != As.rows()) {
        throw Error(ErrorCode::InvalidArgument, "solve_lyapunov: dimension mismatch");
    }
    const auto n = As.rows();
    if (!is_hurwitz(As)) {
        throw Error(ErrorCode::NotHurwitz, "solve_lyapunov: As has an eigenvalue with Re >= 0");
    }
    if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm())) {
        throw Error(ErrorCode::BadQ, "Q is not symmetric");
    }
    if (Eigen::LLT<Mat>(Q).info() != Eigen::Success || symmetric_eigenvalues(Q)(0) <= 0.0) {
        throw Error(ErrorCode::BadQ, "Q is not positive definite");
    }

    // vec(P As) = (As^T (x) I) vec P,  vec(As^T P) = (I (x) As^T) vec P
    const Mat I = Mat::Identity(n, n);
    const Mat At = As.transpose();
    const Mat K = kron(At, I) + kron(I, At);
    const Vec rhs = -Eigen::Map<const Vec>(Q.data(), n * n);
    const Vec p = solve_linear(K, rhs);
    Mat P = Eigen::Map<const Mat>(p.data(), n, n);
    return 0.5 * (P + P.transpose());
}

double spectral_norm(const Mat& M) {
    if (!all_finite(M)) {
        throw Error(ErrorCode::InvalidArgument, "spectral_norm: non-finite entry");
    }
    if (M.size() == 0 || M.norm() == 0.0) {
        return 0.0;
    }
    const Mat G = M.transpose() * M;
    const auto n = G.rows();

    // Deterministic, non-symmetric start vector; fall back to coordinate
    // vectors if it lands in the null space.
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = 1.0 + 0.1 * static_cast<double>(i + 1) / static_cast<double>(n);
    }
    v.normalize();
    if ((G * v).norm() == 0.0) {
        Eigen::Index j = 0;
        G.colwise().norm().maxCoeff(&j);
        v = Vec::Unit(n, j);
    }

    double sigma2 = v.dot(G * v);
    for (int it = 0; it < 100000; ++it) {
        Vec w = G * v;
        const double nw = w.norm();
        if (nw == 0.0) {
            break;
        }
        v = w / nw;
        const double next = v.dot(G * v);
        const bool done = std::abs(next - sigma2) <= 1e-12 * next;
        sigma2 = next;
        if (done) {
            break;
        }
    }
    return std::sqrt(std::max(sigma2, 0.0));
}

double max_real_part(const std::vector<Complex>& values) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : values) {
        m = std::max(m, v.real());
    }
    return m;
}

bool is_hurwitz(const Mat& M) {
    return M.rows() == 0 || max_real_part(eig(M)) < 0.0;
}

Vec symmetric_eigenvalues(const Mat& S) {
    require_square(S, "symmetric_eigenvalues");
    if (S.rows() == 0) {
        return Vec{};
    }
    Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Mat null_space(const Mat& M, double tol) {
    const auto n = M.cols();
    if (M.rows() == 0 || M.norm() == 0.0) {
        return Mat::Identity(n, n);
    }
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tol * s(0)) {
            ++r;
        }
    }
    return svd.matrixV().rightCols(n - r);
}

Mat solve_sylvester(const Mat& A, const Mat& B, const Mat& C) {
    require_square(A, "solve_sylvester: A");
    require_square(B, "solve_sylvester: B");
    if (C.rows() != A.rows() || C.cols() != B.rows()) {
        throw Error(ErrorCode::InvalidArgument, "solve_sylvester: dimension mismatch");
    }
    const auto m = A.rows();
    const auto n = B.rows();
    // vec(A X) = (I (x) A) vec X,  vec(X B) = (B^T (x) I) vec X
    const Mat K = kron(Mat::Identity(n, n), A) + kron(B.transpose(), Mat::Identity(m, m));
    const Vec x = solve_linear(K, Eigen::Map<const Vec>(C.data(), m * n));
    return Eigen::Map<const Mat>(x.data(), m, n);
}

bool all_finite(const Mat& M) {
    return M.allFinite();
}

double spectrum_mismatch(std::vector<Complex> got, std::vector<Complex> want) {
    if (got.size() != want.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (const auto& w : want) {
        auto it = std::min_element(got.begin(), got.end(), [&](const Complex& a, const Complex& b) {
            return std::abs(a - w) < std::abs(b - w);
        });
        worst = std::max(worst, std::abs(*it - w));
        got.erase(it);
    }
    return worst;
}

NnlsResult nnls(const Mat& A, const Vec& b) {
    if (A.rows() != b.size()) {
        throw Error(ErrorCode::InvalidArgument, "nnls: dimension mismatch");
    }
    const auto n = A.cols();
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * std::max<double>(A.rows(), n) *
                       std::max(1.0, A.norm()) * std::max(1.0, b.norm());

    Vec x = Vec::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    NnlsResult result;

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[static_cast<std::size_t>(j)]) {
                idx.push_back(j);
            }
        }
        Vec z = Vec::Zero(n);
        if (idx.empty()) {
            return z;
        }
        Mat Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        }
        const Vec zp = Ap.colPivHouseholderQr().solve(b);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            z(idx[k]) = zp(static_cast<Eigen::Index>(k));
        }
        return z;
    };

    const int max_outer = static_cast<int>(3 * n + 10);
    for (int outer = 0; outer < max_outer; ++outer) {
        const Vec w = A.transpose() * (b - A * x);
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                t = j;
            }
        }
        if (t < 0) {
            break;
        }
        passive[static_cast<std::size_t>(t)] = true;
        ++result.iterations;

        Vec z = solve_passive();
        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            double alpha = 1.0;
            bool infeasible = false;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    infeasible = true;
                    const double denom = x(j) - z(j);
                    if (denom > 0.0) {
                        alpha = std::min(alpha, x(j) / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            if (!infeasible) {
                break;
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
            z = solve_passive();
        }
        x = z;
    }
    result.x = x.cwiseMax(0.0);
    result.residual = (A * result.x - b).norm();
    return result;
}

} // namespace smobank
