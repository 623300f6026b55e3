#include "smobank/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>

namespace smobank {

Vec rk4_step(const OdeFn& f, double t, const Vec& y, double h) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
    const Vec k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
    const Vec k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec euler_step(const OdeFn& f, double t, const Vec& y, double h) {
    return y + h * f(t, y);
}

namespace {

Vec step(Method m, const OdeFn& f, double t, const Vec& y, double h) {
    return m == Method::rk4 ? rk4_step(f, t, y, h) : euler_step(f, t, y, h);
}

long step_count(double t0, double t_end, double dt) {
    return std::lround((t_end - t0) / dt);
}

// Offsets of each block inside the flat integrator state.
struct Layout {
    Eigen::Index n = 0, N = 0, k = 0;
    bool single = false;

    [[nodiscard]] Eigen::Index x() const { return 0; }
    [[nodiscard]] Eigen::Index xhat() const { return n; }
    [[nodiscard]] Eigen::Index xs() const { return n + n * N; }
    [[nodiscard]] Eigen::Index rls_mat() const { return xs() + (single ? n : 0); }
    [[nodiscard]] Eigen::Index rls_vec() const { return rls_mat() + k * k; }
    [[nodiscard]] Eigen::Index size() const { return rls_vec() + k; }
};

Vec input_at(const Scenario& sc, double t) {
    if (sc.input) {
        return sc.input(t);
    }
    return Vec::Zero(sc.system.m());
}

Vec fault_at(const Scenario& sc, double t, const Vec& x, const Vec& u) {
    if (sc.fault) {
        return sc.fault(t, x, u);
    }
    return Vec::Zero(sc.system.q());
}

Vec plant_rhs(const Scenario& sc, double t, const Vec& x) {
    const auto& sys = sc.system;
    const Vec u = input_at(sc, t);
    Vec dx = sys.A() * x + sys.D() * fault_at(sc, t, x, u);
    if (sys.m() > 0) {
        dx += sys.B() * u;
    }
    return dx;
}

} // namespace

Vec integrate_ode(const OdeFn& f, const Vec& y0, double t0, double t_end, double dt, Method method) {
    if (!(dt > 0.0) || !(t_end >= t0)) {
        throw Error(ErrorCode::InvalidArgument, "integrate_ode: need dt > 0 and t_end >= t0");
    }
    const long steps = step_count(t0, t_end, dt);
    Vec y = y0;
    for (long i = 0; i < steps; ++i) {
        y = step(method, f, t0 + static_cast<double>(i) * dt, y, dt);
    }
    return y;
}

void validate_scenario(const Scenario& sc) {
    const auto n = sc.system.n();
    if (!(sc.dt > 0.0) || !(sc.t_end > sc.dt)) {
        throw Error(ErrorCode::InvalidArgument, "scenario needs dt > 0 and t_end > dt");
    }
    if (!(sc.log_interval > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "log_interval must be positive");
    }
    if (sc.x0.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "x0 must have n entries");
    }
    if (sc.gains.delta == 0.0 && sc.method != Method::euler) {
        throw Error(ErrorCode::InvalidArgument, "the discontinuous injection (delta = 0) requires the euler method");
    }
    if (sc.single_x0 && sc.single_x0->size() != n) {
        throw Error(ErrorCode::InvalidArgument, "single_x0 must have n entries");
    }
    if (!(sc.tau_f >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau_f must be >= 0");
    }
    validate_bank_config(sc.bank, n);
}

Vec single_initial_state(const Scenario& sc) {
    if (sc.single_x0) {
        return *sc.single_x0;
    }
    return combined_estimate(sc.bank.initial_states, sc.bank.alpha0);
}

SimTrace integrate(const Scenario& sc, const SampleCallback& on_sample) {
    validate_scenario(sc);
    const auto& sys = sc.system;
    const auto& g = sc.gains;
    const bool info_form = sc.rls_form == RlsForm::information;

    Layout L;
    L.n = sys.n();
    L.N = sc.bank.size();
    L.k = L.N - 1;
    L.single = sc.compare_single;

    const BankInit init = init_bank(sys, sc.bank);
    Vec Y(L.size());
    Y.segment(L.x(), L.n) = sc.x0;
    Y.segment(L.xhat(), L.n * L.N) = Eigen::Map<const Vec>(init.state.xhat.data(), L.n * L.N);
    if (L.single) {
        Y.segment(L.xs(), L.n) = single_initial_state(sc);
    }
    if (info_form) {
        const InformationState info = to_information(init.state.alpha_bar, init.state.R);
        Y.segment(L.rls_mat(), L.k * L.k) = Eigen::Map<const Vec>(info.S.data(), L.k * L.k);
        Y.segment(L.rls_vec(), L.k) = info.z;
    } else {
        Y.segment(L.rls_mat(), L.k * L.k) = Eigen::Map<const Vec>(init.state.R.data(), L.k * L.k);
        Y.segment(L.rls_vec(), L.k) = init.state.alpha_bar;
    }

    const OdeFn rhs = [&](double t, const Vec& s) -> Vec {
        Vec d(L.size());
        const Vec x = s.segment(L.x(), L.n);
        const Vec u = input_at(sc, t);
        const Vec y = sys.C() * x;
        d.segment(L.x(), L.n) = plant_rhs(sc, t, x);

        const Mat xhat = Eigen::Map<const Mat>(s.data() + L.xhat(), L.n, L.N);
        const Mat M = Eigen::Map<const Mat>(s.data() + L.rls_mat(), L.k, L.k);
        const Vec v = s.segment(L.rls_vec(), L.k);
        if (info_form) {
            const InformationDerivative dd = information_derivative(xhat, {M, v}, g, sys, u, y);
            d.segment(L.xhat(), L.n * L.N) = Eigen::Map<const Vec>(dd.dxhat.data(), L.n * L.N);
            d.segment(L.rls_mat(), L.k * L.k) = Eigen::Map<const Vec>(dd.dS.data(), L.k * L.k);
            d.segment(L.rls_vec(), L.k) = dd.dz;
        } else {
            const BankState st{xhat, v, M, t};
            const BankDerivative dd = bank_derivative(st, g, sys, u, y);
            d.segment(L.xhat(), L.n * L.N) = Eigen::Map<const Vec>(dd.dxhat.data(), L.n * L.N);
            d.segment(L.rls_mat(), L.k * L.k) = Eigen::Map<const Vec>(dd.dR.data(), L.k * L.k);
            d.segment(L.rls_vec(), L.k) = dd.dalpha;
        }
        if (L.single) {
            d.segment(L.xs(), L.n) = smo_derivative(s.segment(L.xs(), L.n), g, sys, u, y);
        }
        return d;
    };

    auto trace = std::make_shared<SimTrace>();
    trace->n = L.n;
    trace->N = L.N;
    trace->p = sys.p();
    trace->q = sys.q();
    trace->has_single = L.single;

    EquivalentSignalFilter bank_filter(sc.tau_f);
    EquivalentSignalFilter single_filter(sc.tau_f);
    double last_logged = 0.0;

    auto record = [&](double t, const Vec& s) {
        const Vec x = s.segment(L.x(), L.n);
        const Mat xhat = Eigen::Map<const Mat>(s.data() + L.xhat(), L.n, L.N);
        const Mat M = Eigen::Map<const Mat>(s.data() + L.rls_mat(), L.k, L.k);
        const Vec v = s.segment(L.rls_vec(), L.k);
        const InformationState info{M, v};
        const Vec alpha_bar = info_form ? alpha_from_information(info) : v;

        const Vec u = input_at(sc, t);
        const Vec y = sys.C() * x;
        const Vec xo = combined_estimate(xhat, alpha_bar);
        const Vec ey = sys.C() * xo - y;
        const Vec nu = injection(g.P2, ey, g.rho, g.delta);
        const double dt_log = trace->t.empty() ? 0.0 : t - last_logged;

        trace->t.push_back(t);
        trace->x.push_back(x);
        trace->xo.push_back(xo);
        trace->alpha.push_back(full_weights(alpha_bar));
        trace->nu.push_back(nu);
        trace->xi_true.push_back(fault_at(sc, t, x, u));
        trace->xi_hat.push_back(reconstruct_fault(sc.canonical, bank_filter.update(nu, dt_log)).xi_hat_ls);
        trace->ytilde_norm.push_back(ey.norm());
        if (!trace->simplex_exit && !weights_in_simplex(alpha_bar, 1e-9)) {
            trace->simplex_exit = t;
        }

        Vec xs;
        if (L.single) {
            xs = s.segment(L.xs(), L.n);
            const Vec es = sys.C() * xs - y;
            const Vec nus = injection(g.P2, es, g.rho, g.delta);
            trace->x_single.push_back(xs);
            trace->xi_hat_single.push_back(
                reconstruct_fault(sc.canonical, single_filter.update(nus, dt_log)).xi_hat_ls);
            trace->ytilde_norm_single.push_back(es.norm());
        }
        last_logged = t;

        if (on_sample) {
            SimSnapshot snap;
            snap.t = t;
            snap.x = &x;
            snap.xhat = &xhat;
            snap.x_single = L.single ? &xs : nullptr;
            snap.alpha_bar = alpha_bar;
            snap.R = info_form ? covariance_from_information(info) : M;
            on_sample(snap);
        }
    };

    const long steps = step_count(0.0, sc.t_end, sc.dt);
    const long stride = std::max(1L, std::lround(sc.log_interval / sc.dt));
    record(0.0, Y);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * sc.dt;
        const double t_next = static_cast<double>(i + 1) * sc.dt;
        try {
            Y = step(sc.method, rhs, t, Y, sc.dt);
            // keep the RLS matrix symmetric against rounding drift
            Eigen::Map<Mat> M(Y.data() + L.rls_mat(), L.k, L.k);
            M = (0.5 * (M + M.transpose())).eval();
            if (!Y.allFinite()) {
                throw NumericalBlowup(t_next, trace);
            }
            if ((i + 1) % stride == 0 || i + 1 == steps) {
                record(t_next, Y);
            }
        } catch (const NumericalBlowup&) {
            throw;
        } catch (const Error& e) {
            // the RLS matrix is positive definite along any finite trajectory,
            // so a singular solve here means the state has overflowed
            if (e.code() != ErrorCode::SingularMatrix) throw;
            throw NumericalBlowup(t_next, trace);
        }
    }
    return std::move(*trace);
}

std::vector<Vec> integrate_plant(const Scenario& sc) {
    validate_scenario(sc);
    const OdeFn rhs = [&](double t, const Vec& x) -> Vec { return plant_rhs(sc, t, x); };
    const long steps = step_count(0.0, sc.t_end, sc.dt);
    const long stride = std::max(1L, std::lround(sc.log_interval / sc.dt));
    std::vector<Vec> out{sc.x0};
    Vec x = sc.x0;
    for (long i = 0; i < steps; ++i) {
        x = step(sc.method, rhs, static_cast<double>(i) * sc.dt, x, sc.dt);
        if ((i + 1) % stride == 0 || i + 1 == steps) {
            out.push_back(x);
        }
    }
    return out;
}

double window_rms(std::span<const double> t, std::span<const double> v, double a, double b) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= a - 1e-12 && t[i] <= b + 1e-12) {
            acc += v[i] * v[i];
            ++count;
        }
    }
    return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

double itae(std::span<const double> t, std::span<const double> err) {
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        acc += 0.5 * (t[i] - t[i - 1]) * (t[i] * err[i] + t[i - 1] * err[i - 1]);
    }
    return acc;
}

namespace {

TraceMetrics metrics_for(const SimTrace& tr, const std::vector<Vec>& estimate, const std::vector<double>& ynorm,
                         const std::vector<Vec>& xi_hat, const SlidingDetector& det, const MetricWindows& w) {
    TraceMetrics m;
    if (tr.t.empty()) {
        return m;
    }
    std::vector<double> err(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        err[i] = (estimate[i] - tr.x[i]).norm();
    }
    const double t_end = tr.t.back();
    m.transient_rms = window_rms(tr.t, err, 0.0, w.transient_end);
    m.steady_rms = window_rms(tr.t, err, t_end - w.steady_span, t_end);
    m.rms = window_rms(tr.t, err, 0.0, t_end);
    m.itae = itae(tr.t, err);
    m.final_error = err.back();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr.t[i] >= 0.5 * t_end) {
            m.max_error_after_transient = std::max(m.max_error_after_transient, err[i]);
        }
    }
    m.onset = detect_sliding(tr.t, ynorm, det);
    if (m.onset) {
        const double a = *m.onset + w.fault_delay;
        if (a < t_end) {
            std::vector<double> fe(tr.size()), fx(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i) {
                fe[i] = (xi_hat[i] - tr.xi_true[i]).norm();
                fx[i] = tr.xi_true[i].norm();
            }
            m.fault_rms = window_rms(tr.t, fe, a, t_end);
            const double ref = window_rms(tr.t, fx, a, t_end);
            if (ref > 0.0) {
                m.fault_ratio = *m.fault_rms / ref;
            }
        }
    }
    return m;
}

} // namespace

TraceMetrics bank_metrics(const SimTrace& tr, const SlidingDetector& det, const MetricWindows& w) {
    return metrics_for(tr, tr.xo, tr.ytilde_norm, tr.xi_hat, det, w);
}

TraceMetrics single_metrics(const SimTrace& tr, const SlidingDetector& det, const MetricWindows& w) {
    if (!tr.has_single) {
        throw Error(ErrorCode::InvalidArgument, "trace has no single-observer series");
    }
    return metrics_for(tr, tr.x_single, tr.ytilde_norm_single, tr.xi_hat_single, det, w);
}

RunReport summarize(const Scenario& sc, const SimTrace& tr) {
    RunReport r;
    r.mu = sc.bank.mu;
    r.bank = bank_metrics(tr, sc.sliding);
    if (tr.has_single) {
        r.single = single_metrics(tr, sc.sliding);
    }
    r.simplex_exit = tr.simplex_exit;
    return r;
}

ComparisonReport run_comparison(const Scenario& sc) {
    if (!sc.compare_single) {
        throw Error(ErrorCode::InvalidArgument, "run_comparison requires compare_single = true");
    }
    ComparisonReport rep;
    rep.single_x0 = single_initial_state(sc);
    rep.trace = integrate(sc);
    rep.run = summarize(sc, rep.trace);
    return rep;
}

unsigned sweep_threads() {
    if (const char* env = std::getenv("SMOBANK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunReport> sweep_mu(const Scenario& sc, std::span<const double> mus, unsigned threads) {
    if (mus.empty()) {
        throw Error(ErrorCode::InvalidArgument, "mu list is empty");
    }
    std::vector<double> sorted(mus.begin(), mus.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<RunReport> out(sorted.size());
    threads = std::max(1u, threads);

    auto run_one = [&](std::size_t i) {
        Scenario local = sc;
        local.bank.mu = sorted[i];
        out[i] = summarize(local, integrate(local));
    };
    for (std::size_t base = 0; base < sorted.size(); base += threads) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = base; i < std::min(sorted.size(), base + threads); ++i) {
            batch.push_back(std::async(std::launch::async, run_one, i));
        }
        for (auto& f : batch) {
            f.get();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

UncertainSystem mck_system(double xi_bar) {
    Mat A(4, 4);
    A << 0, -1, 0, 0,
         1, 0.7, 0, 0,
         0, 0, 0, -10,
         0, 0, 1.5, 0;
    Mat D(4, 1);
    D << -1, 0, 10, 0;
    Mat C(2, 4);
    C << 1, 0, 0, 0,
         0, 1, 0, 1;
    return UncertainSystem(A, Mat::Zero(4, 1), C, D, xi_bar);
}

double mck_fault(const Vec& x) {
    const double s = x(0) - x(2);
    if (s < -1.0) {
        return 0.2 + 3.0 * (s + 1.0);
    }
    if (s <= 1.0) {
        return -0.2 * s;
    }
    return -0.2 + 3.0 * (s - 1.0);
}

FaultFn mck_fault_fn() {
    return [](double, const Vec& x, const Vec&) { return Vec::Constant(1, mck_fault(x)); };
}

Mat mck_reference_transform() {
    Mat J(4, 4);
    J << 10, 22.857, 1, 22.857,
         0, -63.265, 0, -64.265,
         1, 0, 0, 0,
         0, 1, 0, 1;
    return J;
}

Mat mck_reference_initial_states() {
    Mat X(4, 5);
    X << 1, -1, 1, 1, 1,
         -1, 1, 1, -1, -1,
         1, -1, 1, -1, 1,
         -1, 1, -1, 1, 1;
    return X;
}

Vec mck_reference_x0() {
    Vec x0(4);
    x0 << -0.1, 0, 0.2, 0;
    return x0;
}

Vec mck_reference_alpha0() {
    return Vec::Constant(4, 0.2);
}

std::vector<Complex> mck_reference_poles() {
    return {Complex(-4.0, 0.0), Complex(-6.0, 0.0)};
}

Scenario mck_scenario(const MckOptions& opt) {
    UncertainSystem sys = mck_system();
    const auto J = opt.reference_transform ? std::optional<Mat>(mck_reference_transform()) : std::nullopt;
    CanonicalForm cf = to_canonical(sys, mck_reference_poles(), J);
    ObserverGains g = design_gains(sys, cf, -10.0 * Mat::Identity(2, 2), default_Q2(2), opt.rho, opt.delta);
    BankConfig bank{mck_reference_initial_states(), mck_reference_alpha0(), opt.mu};
    Scenario sc{std::move(sys), std::move(cf), std::move(g), std::move(bank), mck_reference_x0()};
    sc.fault = mck_fault_fn();
    sc.dt = opt.dt;
    sc.t_end = opt.t_end;
    sc.compare_single = opt.compare_single;
    return sc;
}

} // namespace smobank
