#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "smobank/bank.hpp"
#include "smobank/design.hpp"
#include "smobank/faultrec.hpp"

namespace smobank {

enum class Method { rk4, euler };
enum class RlsForm { information, covariance };

using OdeFn = std::function<Vec(double t, const Vec& y)>;
using FaultFn = std::function<Vec(double t, const Vec& x, const Vec& u)>;
using InputFn = std::function<Vec(double t)>;

[[nodiscard]] Vec rk4_step(const OdeFn& f, double t, const Vec& y, double h);
[[nodiscard]] Vec euler_step(const OdeFn& f, double t, const Vec& y, double h);

// Fixed-step integration from t0 to t_end (the step count is rounded to the
// nearest integer multiple of dt).
[[nodiscard]] Vec integrate_ode(const OdeFn& f, const Vec& y0, double t0, double t_end, double dt,
                                Method method = Method::rk4);

struct Scenario {
    UncertainSystem system;
    CanonicalForm canonical;
    ObserverGains gains;
    BankConfig bank;
    Vec x0;
    FaultFn fault;   // empty: xi = 0
    InputFn input;   // empty: u = 0
    double t_end = 10.0;
    double dt = 1e-4;
    double log_interval = 1e-3;
    Method method = Method::rk4;
    RlsForm rls_form = RlsForm::information;
    bool compare_single = false;
    std::optional<Vec> single_x0; // default: sum alpha_i(0) xhat_i(0)
    std::vector<double> mu_list;
    SlidingDetector sliding;
    double tau_f = 0.0;
};

void validate_scenario(const Scenario& sc);

// Initial state of the single comparison observer.
[[nodiscard]] Vec single_initial_state(const Scenario& sc);

struct SimTrace {
    Eigen::Index n = 0, N = 0, p = 0, q = 0;
    bool has_single = false;

    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> xo;
    std::vector<Vec> x_single;
    std::vector<Vec> alpha;  // all N weights
    std::vector<Vec> nu;     // shared injection of the bank
    std::vector<Vec> xi_true;
    std::vector<Vec> xi_hat; // least-squares form, q entries
    std::vector<double> ytilde_norm;

    // comparison-only series (not part of the CSV contract)
    std::vector<Vec> xi_hat_single;
    std::vector<double> ytilde_norm_single;

    // first logged time at which the full weight vector left the simplex
    std::optional<double> simplex_exit;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
};

// Full integrator state handed to sample callbacks.
struct SimSnapshot {
    double t = 0.0;
    const Vec* x = nullptr;
    const Mat* xhat = nullptr;
    const Vec* x_single = nullptr;
    Vec alpha_bar;
    Mat R;
};

using SampleCallback = std::function<void(const SimSnapshot&)>;

class NumericalBlowup : public Error {
public:
    NumericalBlowup(double t, std::shared_ptr<const SimTrace> partial)
        : Error(ErrorCode::NumericalBlowup, "non-finite state at t = " + std::to_string(t)), t_(t),
          partial_(std::move(partial)) {}

    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] const SimTrace& partial() const noexcept { return *partial_; }

private:
    double t_;
    std::shared_ptr<const SimTrace> partial_;
};

[[nodiscard]] SimTrace integrate(const Scenario& sc, const SampleCallback& on_sample = {});

// Plant alone, same integrator and grid as integrate().
[[nodiscard]] std::vector<Vec> integrate_plant(const Scenario& sc);

struct MetricWindows {
    double transient_end = 2.0;
    double steady_span = 2.0;
    double fault_delay = 1.0; // fault window starts this long after onset
};

struct TraceMetrics {
    double transient_rms = 0.0; // RMS ||x_tilde|| on [0, transient_end]
    double steady_rms = 0.0;    // RMS ||x_tilde|| on [t_end - steady_span, t_end]
    double rms = 0.0;           // RMS ||x_tilde|| on [0, t_end]
    double itae = 0.0;          // integral of t ||x_tilde||
    double final_error = 0.0;
    double max_error_after_transient = 0.0; // sup over t >= t_end / 2
    std::optional<double> onset;
    std::optional<double> fault_rms;   // RMS ||xi_hat - xi|| after onset + delay
    std::optional<double> fault_ratio; // fault_rms / RMS ||xi|| on the same window
};

[[nodiscard]] double window_rms(std::span<const double> t, std::span<const double> v, double a, double b);
[[nodiscard]] double itae(std::span<const double> t, std::span<const double> err);

[[nodiscard]] TraceMetrics bank_metrics(const SimTrace& tr, const SlidingDetector& det, const MetricWindows& w = {});
[[nodiscard]] TraceMetrics single_metrics(const SimTrace& tr, const SlidingDetector& det,
                                          const MetricWindows& w = {});

struct RunReport {
    double mu = 0.0;
    TraceMetrics bank;
    std::optional<TraceMetrics> single;
    std::optional<double> simplex_exit;
};

struct ComparisonReport {
    RunReport run;
    Vec single_x0;
    SimTrace trace;
};

[[nodiscard]] RunReport summarize(const Scenario& sc, const SimTrace& tr);

// Bank and single SMO side by side; requires compare_single.
[[nodiscard]] ComparisonReport run_comparison(const Scenario& sc);

// One run per mu (bank.mu replaced), executed on up to `threads` workers and
// returned sorted by mu.
[[nodiscard]] std::vector<RunReport> sweep_mu(const Scenario& sc, std::span<const double> mus, unsigned threads);

// Worker cap from SMOBANK_THREADS, else hardware concurrency.
[[nodiscard]] unsigned sweep_threads();

// ---------------------------------------------------------------------------
// Matsumoto-Chua-Kobayashi circuit benchmark

[[nodiscard]] UncertainSystem mck_system(double xi_bar = 0.4);
[[nodiscard]] double mck_fault(const Vec& x);
[[nodiscard]] FaultFn mck_fault_fn();
[[nodiscard]] Mat mck_reference_transform();     // reference J
[[nodiscard]] Mat mck_reference_initial_states(); // 4 x 5 vertices
[[nodiscard]] Vec mck_reference_x0();
[[nodiscard]] Vec mck_reference_alpha0();
[[nodiscard]] std::vector<Complex> mck_reference_poles(); // {-4, -6}

struct MckOptions {
    double mu = 100.0;
    double rho = 10.0;
    double delta = 0.01;
    double dt = 1e-4;
    double t_end = 10.0;
    bool reference_transform = true;
    bool compare_single = true;
};

[[nodiscard]] Scenario mck_scenario(const MckOptions& opt = {});

} // namespace smobank
