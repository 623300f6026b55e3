#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "smobank/faultrec.hpp"
#include "smobank/simlab.hpp"

using namespace smobank;

namespace {

CanonicalForm with_D2(const Mat& D2) {
    CanonicalForm cf;
    cf.D2 = D2;
    return cf;
}

} // namespace

TEST_CASE("equivalent_signal: pass-through, zero stream, constant fixed point") {
    std::mt19937_64 rng(3);
    std::vector<Vec> stream;
    std::vector<double> t;
    for (int k = 0; k < 200; ++k) {
        stream.push_back(oracle::random_matrix(2, 1, rng));
        t.push_back(1e-3 * k);
    }
    const auto same = equivalent_signal(stream, t, 0.0);
    for (std::size_t k = 0; k < stream.size(); ++k) {
        CHECK((same[k] - stream[k]).norm() == 0.0);
    }

    const std::vector<Vec> zeros(200, Vec::Zero(2));
    for (const auto& v : equivalent_signal(zeros, t, 0.05)) {
        CHECK(v.norm() == 0.0);
    }

    Vec c(2);
    c << 1.5, -0.5;
    const std::vector<Vec> constant(200, c);
    const auto f = equivalent_signal(constant, t, 0.02);
    CHECK((f.back() - c).norm() <= 1e-12);

    // a step from 0 to c approaches c at the exponential rate of the filter
    std::vector<Vec> step(200, c);
    step[0] = Vec::Zero(2);
    const auto g = equivalent_signal(step, t, 0.02);
    const double expected = 1.0 - std::exp(-t.back() / 0.02);
    CHECK((g.back() - expected * c).norm() <= 1e-12);
}

TEST_CASE("reconstruct_fault: MCK D2 examples") {
    Mat D2(2, 1);
    D2 << -1, 0;
    const auto cf = with_D2(D2);
    Vec nu(2);
    nu << 0.3, -0.7;
    const auto est = reconstruct_fault(cf, nu);
    REQUIRE(est.xi_hat_ls.size() == 1);
    CHECK(est.xi_hat_ls(0) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(est.xi_hat_projected(0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(est.xi_hat_projected(1) == 0.0);

    const auto zero = reconstruct_fault(cf, Vec::Zero(2));
    CHECK(zero.xi_hat_ls.norm() == 0.0);
    CHECK(zero.xi_hat_projected.norm() == 0.0);

    Vec orth(2);
    orth << 0, 2.5;
    CHECK(reconstruct_fault(cf, orth).xi_hat_ls.norm() == 0.0);
}

TEST_CASE("reconstruct_fault: projection identity and invertible case") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat D2 = oracle::random_matrix(4, 2, rng);
        const Vec nu = oracle::random_matrix(4, 1, rng);
        const auto est = reconstruct_fault(with_D2(D2), nu);
        // D2 xi_ls = ||D2|| * (orthogonal projection of nu onto range D2)
        const Eigen::HouseholderQR<Mat> qr(D2);
        const Mat Q = qr.householderQ() * Mat::Identity(4, 2);
        const Vec proj = Q * (Q.transpose() * nu);
        const double s = oracle::two_norm(D2);
        CHECK((est.xi_hat_projected - s * proj).norm() <= 1e-10 * (1 + s * nu.norm()));
        CHECK((est.xi_hat_projected - D2 * est.xi_hat_ls).norm() == 0.0);
    }
    for (int trial = 0; trial < 20; ++trial) {
        const Mat D2 = oracle::random_matrix(3, 3, rng);
        const Vec nu = oracle::random_matrix(3, 1, rng);
        const auto est = reconstruct_fault(with_D2(D2), nu);
        CHECK((est.xi_hat_projected - oracle::two_norm(D2) * nu).norm() <= 1e-9 * (1 + nu.norm()));
    }
}

TEST_CASE("reconstruct_fault: rank-deficient D2") {
    Mat D2(3, 2);
    D2 << 1, 2, 2, 4, 0, 0;
    try {
        (void)reconstruct_fault(with_D2(D2), Vec::Zero(3));
        FAIL("expected SingularD2");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularD2);
    }
}

TEST_CASE("detect_sliding: examples") {
    std::vector<double> t;
    for (int k = 0; k <= 2000; ++k) t.push_back(1e-3 * k);

    const std::vector<double> zero(t.size(), 0.0);
    const auto z = detect_sliding(t, zero);
    REQUIRE(z.has_value());
    CHECK(*z == 0.0);

    const std::vector<double> high(t.size(), 1.0);
    CHECK_FALSE(detect_sliding(t, high).has_value());

    // dips below threshold at 0.3 s for 0.4 s, then for good from 1.0 s
    std::vector<double> v(t.size(), 1.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if ((t[k] >= 0.3 && t[k] < 0.7) || t[k] >= 1.0 - 1e-12) v[k] = 1e-3;
    }
    const auto on = detect_sliding(t, v, {1e-2, 0.5});
    REQUIRE(on.has_value());
    CHECK(*on == doctest::Approx(1.0).epsilon(1e-12));

    // not enough samples left to cover the dwell window
    std::vector<double> late(t.size(), 1.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= 1.8) late[k] = 0.0;
    }
    CHECK_FALSE(detect_sliding(t, late, {1e-2, 0.5}).has_value());
}

TEST_CASE("detect_sliding: brute-force agreement on random streams") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t, v;
        for (int k = 0; k < 300; ++k) {
            t.push_back(0.01 * k);
            v.push_back(u(rng) < 0.9 ? 0.001 : 0.5);
        }
        const SlidingDetector det{0.01, 0.2};
        std::optional<double> want;
        for (std::size_t i = 0; i < t.size() && !want; ++i) {
            bool ok = false;
            for (std::size_t j = i; j < t.size(); ++j) {
                if (v[j] > det.threshold) break;
                if (t[j] - t[i] >= det.dwell - 1e-12) {
                    ok = true;
                    break;
                }
            }
            if (ok) want = t[i];
        }
        const auto got = detect_sliding(t, v, det);
        CHECK(got.has_value() == want.has_value());
        if (got && want) CHECK(*got == *want);
    }
}

TEST_CASE("reconstruction error shrinks with the boundary layer") {
    // trailing window [t_end - 2, t_end] of the benchmark run
    double previous = INFINITY;
    for (double delta : {0.1, 0.01}) {
        MckOptions opt;
        opt.delta = delta;
        opt.compare_single = false;
        const auto sc = mck_scenario(opt);
        const auto tr = integrate(sc);
        std::vector<double> err;
        for (std::size_t k = 0; k < tr.size(); ++k) err.push_back((tr.xi_hat[k] - tr.xi_true[k]).norm());
        const double rms = window_rms(tr.t, err, sc.t_end - 2.0, sc.t_end);
        MESSAGE("delta = " << delta << ": trailing RMS(xi_hat - xi) = " << rms);
        CHECK(rms < previous);
        previous = rms;
    }
}
