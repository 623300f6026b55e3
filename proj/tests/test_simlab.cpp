#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "smobank/simlab.hpp"
#include "smobank/trace_io.hpp"

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

std::vector<double> error_norm(const std::vector<Vec>& est, const std::vector<Vec>& x) {
    std::vector<double> out;
    for (std::size_t k = 0; k < x.size(); ++k) out.push_back((est[k] - x[k]).norm());
    return out;
}

Scenario short_mck(double t_end, double dt) {
    MckOptions opt;
    opt.t_end = t_end;
    opt.dt = dt;
    return mck_scenario(opt);
}

} // namespace

TEST_CASE("mck_system and mck_fault") {
    const auto sys = mck_system();
    CHECK(sys.A()(2, 3) == -10.0);
    CHECK((sys.A() - oracle::mck_A()).norm() == 0.0);
    CHECK((sys.C() - oracle::mck_C()).norm() == 0.0);
    CHECK((sys.D() - oracle::mck_D()).norm() == 0.0);
    CHECK(sys.B().norm() == 0.0);
    CHECK(sys.xi_bar() == 0.4);
    CHECK(rank(sys.C() * sys.D()) == 1);

    const auto at = [](double s) {
        Vec x = Vec::Zero(4);
        x(0) = s;
        return mck_fault(x);
    };
    CHECK(at(0.0) == 0.0);
    CHECK(at(1.0) == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(at(1.0 + 1e-12) == doctest::Approx(-0.2).epsilon(1e-9));
    CHECK(at(2.0) == doctest::Approx(2.8).epsilon(1e-15));
    CHECK(at(-1.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(at(-1.0 - 1e-12) == doctest::Approx(0.2).epsilon(1e-9));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Vec x = 2.0 * oracle::random_matrix(4, 1, rng);
        CHECK(mck_fault(x) == oracle::mck_xi(x));
    }
    CHECK((mck_fault_fn()(0.0, Vec::Unit(4, 0) * 3.0, Vec::Zero(1)))(0) == doctest::Approx(5.8));
}

TEST_CASE("reference initial conditions") {
    const Vec xs = mck_reference_initial_states() * full_weights(mck_reference_alpha0());
    Vec want(4);
    want << 0.6, -0.2, 0.2, 0.2;
    CHECK((xs - want).norm() <= 1e-15);
    const auto sc = mck_scenario();
    CHECK((single_initial_state(sc) - want).norm() <= 1e-15);
}

TEST_CASE("integrate_ode: scalar exponential") {
    const OdeFn f = [](double, const Vec& y) { return Vec(-y); };
    const Vec y = integrate_ode(f, Vec::Ones(1), 0.0, 1.0, 1e-3);
    CHECK(std::abs(y(0) - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("integrate_ode: linear plant against the matrix exponential, order of accuracy") {
    const Mat A = oracle::mck_A();
    const OdeFn f = [&](double, const Vec& y) { return Vec(A * y); };
    const Vec x0 = mck_reference_x0();
    const Vec exact = oracle::expm(A) * x0;
    CHECK((integrate_ode(f, x0, 0.0, 1.0, 1e-3) - exact).norm() <= 1e-8);

    const double e1 = (integrate_ode(f, x0, 0.0, 1.0, 0.02) - exact).norm();
    const double e2 = (integrate_ode(f, x0, 0.0, 1.0, 0.01) - exact).norm();
    MESSAGE("rk4 error ratio for halved step: " << e1 / e2);
    CHECK(e1 / e2 > 14.0);
    CHECK(e1 / e2 < 18.0);

    const double f1 = (integrate_ode(f, x0, 0.0, 1.0, 2e-3, Method::euler) - exact).norm();
    const double f2 = (integrate_ode(f, x0, 0.0, 1.0, 1e-3, Method::euler) - exact).norm();
    CHECK(f1 / f2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("integrate: plant series matches the matrix exponential without a fault") {
    Scenario sc = short_mck(1.0, 1e-3);
    sc.fault = {};
    const auto tr = integrate(sc);
    REQUIRE(tr.size() == 1001);
    CHECK(tr.t.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((tr.x.back() - oracle::expm(sc.system.A()) * sc.x0).norm() <= 1e-8);
    for (const auto& xi : tr.xi_true) CHECK(xi.norm() == 0.0);
}

TEST_CASE("integrate: determinism and plant independence") {
    const Scenario sc = short_mck(1.0, 1e-4);
    const auto a = integrate(sc);
    const auto b = integrate(sc);
    std::ostringstream sa, sb;
    write_trace_csv(sa, a);
    write_trace_csv(sb, b);
    CHECK(sa.str() == sb.str());

    const auto plant = integrate_plant(sc);
    REQUIRE(plant.size() == a.size());
    bool identical = true;
    for (std::size_t k = 0; k < plant.size(); ++k) identical = identical && (plant[k].array() == a.x[k].array()).all();
    CHECK(identical);
}

TEST_CASE("integrate: trace series share the grid and stay finite") {
    const Scenario sc = short_mck(0.5, 1e-4);
    const auto tr = integrate(sc);
    const auto n = tr.size();
    CHECK(tr.x.size() == n);
    CHECK(tr.xo.size() == n);
    CHECK(tr.x_single.size() == n);
    CHECK(tr.alpha.size() == n);
    CHECK(tr.nu.size() == n);
    CHECK(tr.xi_true.size() == n);
    CHECK(tr.xi_hat.size() == n);
    CHECK(tr.ytilde_norm.size() == n);
    bool finite = true;
    for (std::size_t k = 0; k < n; ++k) {
        finite = finite && all_finite(tr.x[k]) && all_finite(tr.xo[k]) && all_finite(tr.alpha[k]) &&
                 all_finite(tr.nu[k]) && std::isfinite(tr.ytilde_norm[k]);
        CHECK(tr.alpha[k].sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(tr.nu[k].norm() <= sc.gains.rho * (1 + 1e-15));
    }
    CHECK(finite);
}

TEST_CASE("integrate: discontinuous injection requires euler") {
    MckOptions opt;
    opt.delta = 0.0;
    opt.t_end = 0.2;
    Scenario sc = mck_scenario(opt);
    CHECK(code_of([&] { (void)integrate(sc); }) == ErrorCode::InvalidArgument);
    sc.method = Method::euler;
    const auto tr = integrate(sc);
    CHECK(tr.size() > 0);
}

TEST_CASE("integrate: blowup is reported with a partial trace") {
    Scenario sc = short_mck(50.0, 0.5);
    sc.log_interval = 0.5;
    try {
        (void)integrate(sc);
        FAIL("expected NumericalBlowup");
    } catch (const NumericalBlowup& e) {
        CHECK(e.code() == ErrorCode::NumericalBlowup);
        CHECK(e.time() > 0.0);
        CHECK(e.time() < 50.0);
        CHECK(e.partial().size() > 0);
        CHECK(e.partial().t.back() < e.time());
    }
}

TEST_CASE("metrics helpers on closed forms") {
    std::vector<double> t, v, one;
    for (int k = 0; k <= 1000; ++k) {
        t.push_back(1e-3 * k);
        v.push_back(1e-3 * k);
        one.push_back(1.0);
    }
    // sample mean of (k/1000)^2 over k = 0..1000 is 2001/6000
    CHECK(window_rms(t, v, 0.0, 1.0) == doctest::Approx(std::sqrt(2001.0 / 6000.0)).epsilon(1e-12));
    CHECK(window_rms(t, one, 0.2, 0.7) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(itae(t, one) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("benchmark comparison: single start, transient advantage, error decay, sliding") {
    const Scenario sc = mck_scenario();
    const auto rep = run_comparison(sc);
    Vec want(4);
    want << 0.6, -0.2, 0.2, 0.2;
    CHECK((rep.single_x0 - want).norm() <= 1e-15);
    REQUIRE(rep.run.single.has_value());
    CHECK(rep.run.bank.transient_rms < rep.run.single->transient_rms);
    REQUIRE(rep.run.bank.onset.has_value());
    CHECK(*rep.run.bank.onset < 5.0);

    const auto& tr = rep.trace;
    const auto err = error_norm(tr.xo, tr.x);
    // least-squares slope of log ||x_tilde_o|| over the post-transient stretch
    double st = 0, sy = 0, stt = 0, sty = 0, m = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.t[k] < 0.5 || tr.t[k] > sc.t_end / 2) continue;
        const double y = std::log(err[k]);
        st += tr.t[k];
        sy += y;
        stt += tr.t[k] * tr.t[k];
        sty += tr.t[k] * y;
        m += 1;
    }
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    MESSAGE("fitted log-error slope on [0.5, 5]: " << slope);
    CHECK(slope < 0.0);

    const double limit = 2.0 * sc.sliding.threshold;
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.t[k] >= *rep.run.bank.onset) worst = std::max(worst, tr.ytilde_norm[k]);
    }
    MESSAGE("max ||y_tilde_o|| after onset: " << worst);
    CHECK(worst <= limit);
}

TEST_CASE("boundedness of weights and observer states along the benchmark run") {
    const Scenario sc = mck_scenario();
    double max_alpha = 0.0, max_xhat = 0.0;
    (void)integrate(sc, [&](const SimSnapshot& s) {
        max_alpha = std::max(max_alpha, s.alpha_bar.norm());
        for (Eigen::Index i = 0; i < s.xhat->cols(); ++i) max_xhat = std::max(max_xhat, s.xhat->col(i).norm());
    });
    MESSAGE("max ||alpha_bar|| = " << max_alpha << ", max ||xhat_i|| = " << max_xhat);
    CHECK(max_alpha < 10.0);
    CHECK(max_xhat < 1e3);
}

TEST_CASE("perfect-hull degenerate bank") {
    Scenario sc = mck_scenario();
    sc.bank.initial_states = sc.x0.replicate(1, 5);
    sc.bank.allow_degenerate = true;

    SUBCASE("fault-free plant: estimation error stays at rounding level") {
        // zero in exact arithmetic; the observer evaluates A0 xhat + Gl y where
        // the plant evaluates A x, so only rounding separates them
        sc.fault = {};
        const auto rep = run_comparison(sc);
        const auto& b = rep.run.bank;
        CHECK(b.transient_rms <= 1e-11);
        CHECK(b.rms <= 1e-11);
        CHECK(b.itae <= 1e-10);
        CHECK(b.final_error <= 1e-11);
        CHECK(b.max_error_after_transient <= 1e-11);
    }
    SUBCASE("with the fault: the bank reduces to the single observer started at x(0)") {
        const auto rep = run_comparison(sc);
        CHECK((rep.single_x0 - sc.x0).norm() <= 1e-15);
        double gap = 0.0;
        for (std::size_t k = 0; k < rep.trace.size(); ++k) {
            gap = std::max(gap, (rep.trace.xo[k] - rep.trace.x_single[k]).norm());
        }
        CHECK(gap <= 1e-9);
    }
}

TEST_CASE("mu sweep: sorted, deterministic across worker counts, non-increasing transient") {
    Scenario sc = mck_scenario();
    sc.compare_single = false;
    const std::vector<double> mus{1e10, 1e2};
    const auto one = sweep_mu(sc, mus, 1);
    const auto two = sweep_mu(sc, mus, 2);
    REQUIRE(one.size() == 2);
    CHECK(one[0].mu == 1e2);
    CHECK(one[1].mu == 1e10);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(one[i].bank.transient_rms == two[i].bank.transient_rms);
        CHECK(one[i].bank.itae == two[i].bank.itae);
    }
    CHECK(one[1].bank.transient_rms <= one[0].bank.transient_rms);
}

TEST_CASE("covariance and information forms converge to the same trajectory") {
    // both forms integrate the same continuous dynamics; their difference is
    // RK4 truncation error and must shrink at least third order in dt
    std::vector<double> gaps;
    for (double dt : {1e-4, 5e-5}) {
        Scenario sc = short_mck(2.0, dt);
        sc.compare_single = false;
        sc.log_interval = 1e-2;
        const auto info = integrate(sc);
        sc.rls_form = RlsForm::covariance;
        const auto cov = integrate(sc);
        double gap = 0.0;
        for (std::size_t k = 0; k < info.size(); ++k) gap = std::max(gap, (info.xo[k] - cov.xo[k]).norm());
        MESSAGE("dt = " << dt << ": max ||xo_info - xo_cov|| = " << gap);
        gaps.push_back(gap);
    }
    CHECK(gaps[0] <= 1e-5);
    CHECK(gaps[1] <= gaps[0] / 8.0);
}
