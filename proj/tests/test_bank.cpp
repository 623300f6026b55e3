#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "smobank/bank.hpp"
#include "smobank/simlab.hpp"

using namespace smobank;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an smobank::Error");
    return ErrorCode::InvalidArgument;
}

BankState random_state(const Scenario& sc, std::mt19937_64& rng) {
    BankState s;
    s.xhat = oracle::random_matrix(4, 5, rng);
    s.alpha_bar = 0.3 * oracle::random_matrix(4, 1, rng);
    const Mat G = oracle::random_matrix(4, 4, rng);
    s.R = G * G.transpose() + 0.1 * Mat::Identity(4, 4);
    (void)sc;
    return s;
}

} // namespace

TEST_CASE("injection: examples and norm bound") {
    const Mat I = Mat::Identity(2, 2);
    CHECK(injection(I, Vec::Zero(2), 10, 0.0).norm() == 0.0);
    CHECK(injection(I, Vec::Zero(2), 10, 0.01).norm() == 0.0);

    Vec e(2);
    e << 3, 4;
    const Vec v0 = injection(I, e, 10, 0.0);
    CHECK(v0(0) == doctest::Approx(-6.0).epsilon(1e-15));
    CHECK(v0(1) == doctest::Approx(-8.0).epsilon(1e-15));
    const Vec v1 = injection(I, e, 10, 0.01);
    CHECK(v1(0) == doctest::Approx(-30.0 / 5.01).epsilon(1e-14));
    CHECK(v1(1) == doctest::Approx(-40.0 / 5.01).epsilon(1e-14));
    CHECK(v1(0) == doctest::Approx(-5.988).epsilon(1e-3));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat P = oracle::random_spd(3, rng);
        const Vec y = oracle::random_matrix(3, 1, rng) * std::pow(10.0, static_cast<double>(trial % 7) - 4);
        const double delta = (trial % 3) * 0.01;
        CHECK(injection(P, y, 7.5, delta).norm() <= 7.5 * (1 + 1e-15));
    }
}

TEST_CASE("weights and combined estimate") {
    Vec ab(4);
    ab << 0.2, 0.2, 0.2, 0.2;
    const Vec w = full_weights(ab);
    CHECK(w.size() == 5);
    CHECK(w(4) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(weights_in_simplex(ab));
    Vec out(4);
    out << 0.9, 0.9, -0.1, 0.1;
    CHECK_FALSE(weights_in_simplex(out));

    std::mt19937_64 rng(7);
    const Mat X = oracle::random_matrix(4, 5, rng);
    CHECK((combined_estimate(X, Vec::Unit(4, 0)) - X.col(0)).norm() == 0.0);
    CHECK((combined_estimate(X, Vec::Zero(4)) - X.col(4)).norm() == 0.0);

    Vec v(4);
    v << 1.5, -2, 0.25, 3;
    const Mat same = v.replicate(1, 5);
    const Vec any = oracle::random_matrix(4, 1, rng);
    CHECK((combined_estimate(same, any) - v).norm() <= 1e-14 * (1 + any.cwiseAbs().sum()) * v.norm());
    for (int trial = 0; trial < 50; ++trial) {
        const Vec a = oracle::random_matrix(4, 1, rng);
        CHECK(full_weights(a).sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("e_matrix: identical columns and MCK vertices") {
    Vec v(3);
    v << 1, 2, 3;
    CHECK(e_matrix(v.replicate(1, 4)).norm() == 0.0);

    const Mat X = mck_reference_initial_states();
    const Mat E = e_matrix(X);
    CHECK(E.rows() == 4);
    CHECK(E.cols() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK((E.col(i) - (X.col(i) - X.col(4))).norm() == 0.0);
    }
    CHECK(Eigen::FullPivLU<Mat>(E).rank() == 4);
    CHECK(rank(E) == 4);
}

TEST_CASE("init_bank: MCK configuration") {
    const auto sc = mck_scenario();
    const auto init = init_bank(sc.system, sc.bank, mck_reference_x0());
    CHECK((init.state.xhat - mck_reference_initial_states()).norm() == 0.0);
    CHECK((init.state.R - 100.0 * Mat::Identity(4, 4)).norm() == 0.0);
    CHECK(full_weights(init.state.alpha_bar)(4) == doctest::Approx(0.2).epsilon(1e-15));
    REQUIRE(init.witness.has_value());

    // Independent barycentric solve: with N = n + 1 the affine coordinates
    // are unique, so the NNLS witness must agree with their sign pattern.
    Mat M(5, 5);
    M.topRows(4) = mck_reference_initial_states();
    M.row(4).setOnes();
    Vec rhs(5);
    rhs << mck_reference_x0(), 1.0;
    const Vec bary = M.fullPivLu().solve(rhs);
    CHECK((M * bary - rhs).norm() <= 1e-12);
    const bool bary_inside = (bary.array() >= -1e-12).all();
    CHECK(init.witness->inside == bary_inside);
    if (!bary_inside) {
        CHECK(init.witness->residual > kHullTol);
        CHECK(code_of([&] { require_in_hull(*init.witness); }) == ErrorCode::HullViolation);
    }
}

TEST_CASE("hull_witness: interior points are certified") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Mat V = oracle::random_matrix(3, 6, rng);
        Vec w(6);
        for (int i = 0; i < 6; ++i) w(i) = u(rng);
        w /= w.sum();
        const auto h = hull_witness(V, V * w);
        CHECK(h.inside);
        CHECK(h.residual <= 1e-8);
        CHECK((h.alpha.array() >= 0.0).all());
        CHECK(h.alpha.sum() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK_NOTHROW(require_in_hull(h));
    }
}

TEST_CASE("validate_bank_config: errors") {
    const auto sys = mck_system();
    BankConfig cfg;
    cfg.initial_states = mck_reference_x0().replicate(1, 5);
    cfg.alpha0 = mck_reference_alpha0();
    cfg.mu = 100;
    CHECK(code_of([&] { (void)init_bank(sys, cfg); }) == ErrorCode::DegenerateBank);
    cfg.allow_degenerate = true;
    CHECK_NOTHROW((void)init_bank(sys, cfg));

    cfg = BankConfig{mck_reference_initial_states().leftCols(4), Vec::Constant(3, 0.25), 100};
    CHECK(code_of([&] { validate_bank_config(cfg, 4); }) == ErrorCode::InvalidArgument);
    cfg = BankConfig{mck_reference_initial_states(), Vec::Constant(3, 0.25), 100};
    CHECK(code_of([&] { validate_bank_config(cfg, 4); }) == ErrorCode::InvalidArgument);
    cfg = BankConfig{mck_reference_initial_states(), mck_reference_alpha0(), 0.0};
    CHECK(code_of([&] { validate_bank_config(cfg, 4); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("auto_hull_vertices: the origin is strictly inside and E(0) has full rank") {
    for (Eigen::Index n = 1; n <= 6; ++n) {
        for (Eigen::Index N = n + 1; N <= 2 * n + 1; ++N) {
            const Mat V = auto_hull_vertices(n, N, 0.5);
            CHECK(V.cols() == N);
            CHECK(rank(e_matrix(V)) == static_cast<std::size_t>(n));
            const auto h = hull_witness(V, Vec::Zero(n));
            CHECK(h.inside);
            if (N == n + 1) {
                // unique barycentric coordinates, all strictly positive
                const Vec a = Eigen::FullPivLU<Mat>(V.colwise().homogeneous()).solve(Vec::Unit(n + 1, n));
                CHECK(a.minCoeff() > 0.0);
            }
            // points of norm state_bound along the facet normals stay inside
            Vec worst = Vec::Ones(n);
            worst(0) = -static_cast<double>(n);
            for (const Vec& dir : {Vec(Vec::Ones(n)), worst, Vec(-Vec::Ones(n))}) {
                CHECK(hull_witness(V, 0.5 * dir.normalized()).inside);
            }
        }
    }
}

TEST_CASE("bank_derivative: zero regression residual and E = 0") {
    const auto sc = mck_scenario();
    std::mt19937_64 rng(19);
    BankState s = random_state(sc, rng);
    const Vec y = sc.system.C() * combined_estimate(s); // C E alpha + ytilde_N = C xo - y = 0
    const auto d = bank_derivative(s, sc.gains, sc.system, Vec::Zero(1), y);
    CHECK(d.dalpha.norm() <= 1e-12 * (1 + s.R.norm() * s.xhat.norm()));

    BankState flat = s;
    flat.xhat = oracle::random_matrix(4, 1, rng).replicate(1, 5);
    const Vec y2 = oracle::random_matrix(2, 1, rng);
    const auto d2 = bank_derivative(flat, sc.gains, sc.system, Vec::Zero(1), y2);
    CHECK(d2.dR.norm() == 0.0);
    CHECK(d2.dalpha.norm() == 0.0);
}

TEST_CASE("bank_derivative: shared injection cancels in observer differences") {
    const auto sc = mck_scenario();
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const BankState s = random_state(sc, rng);
        const Vec y = oracle::random_matrix(2, 1, rng);
        const auto d = bank_derivative(s, sc.gains, sc.system, Vec::Zero(1), y);
        const Mat dE = e_matrix(d.dxhat);
        const Mat want = sc.gains.A0 * e_matrix(s);
        CHECK((dE - want).norm() <= 1e-10 * (1 + want.norm()));
        // R' is symmetric negative semidefinite
        CHECK((d.dR - d.dR.transpose()).norm() <= 1e-12 * (1 + d.dR.norm()));
        CHECK(Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (d.dR + d.dR.transpose())).eigenvalues().maxCoeff() <=
              1e-9 * (1 + d.dR.norm()));
    }
}

TEST_CASE("covariance and information forms describe the same flow") {
    const auto sc = mck_scenario();
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const BankState s = random_state(sc, rng);
        const Vec y = oracle::random_matrix(2, 1, rng);
        const auto dc = bank_derivative(s, sc.gains, sc.system, Vec::Zero(1), y);
        const InformationState info = to_information(s.alpha_bar, s.R);
        CHECK((alpha_from_information(info) - s.alpha_bar).norm() <= 1e-10 * (1 + s.alpha_bar.norm()));
        CHECK((covariance_from_information(info) - s.R).norm() <= 1e-10 * (1 + s.R.norm()));
        const auto di = information_derivative(s.xhat, info, sc.gains, sc.system, Vec::Zero(1), y);
        CHECK((di.dxhat - dc.dxhat).norm() <= 1e-10 * (1 + dc.dxhat.norm()));
        // S = R^-1  =>  S' = -S R' S ;  z = S alpha  =>  z' = S' alpha + S alpha'
        const Mat dS = -info.S * dc.dR * info.S;
        const Vec dz = dS * s.alpha_bar + info.S * dc.dalpha;
        CHECK((di.dS - dS).norm() <= 1e-8 * (1 + di.dS.norm()));
        CHECK((di.dz - dz).norm() <= 1e-8 * (1 + di.dz.norm()));
    }
}

TEST_CASE("frozen weights: the combined estimate follows the single-observer flow") {
    const auto sc = mck_scenario();
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const BankState s = random_state(sc, rng);
        const Vec y = oracle::random_matrix(2, 1, rng);
        const auto d = bank_derivative(s, sc.gains, sc.system, Vec::Zero(1), y);
        const Vec dxo = combined_estimate(d.dxhat, s.alpha_bar);
        const Vec single = smo_derivative(combined_estimate(s), sc.gains, sc.system, Vec::Zero(1), y);
        CHECK((dxo - single).norm() <= 1e-9 * (1 + single.norm()));
    }
}
