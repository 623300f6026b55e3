#include "smobank/faultrec.hpp"

#include <cmath>

namespace smobank {

EquivalentSignalFilter::EquivalentSignalFilter(double tau_f) : tau_(tau_f) {
    if (!(tau_f >= 0.0) || !std::isfinite(tau_f)) {
        throw Error(ErrorCode::InvalidArgument, "tau_f must be >= 0");
    }
}

Vec EquivalentSignalFilter::update(const Vec& nu_delta, double dt) {
    if (tau_ == 0.0) {
        return nu_delta;
    }
    if (!state_) {
        state_ = nu_delta;
        return *state_;
    }
    // exact discretization of tau y' = v - y for piecewise-constant input
    const double a = 1.0 - std::exp(-dt / tau_);
    *state_ += a * (nu_delta - *state_);
    return *state_;
}

std::vector<Vec> equivalent_signal(std::span<const Vec> nu_delta, std::span<const double> t, double tau_f) {
    if (nu_delta.size() != t.size()) {
        throw Error(ErrorCode::InvalidArgument, "equivalent_signal: stream/time size mismatch");
    }
    EquivalentSignalFilter filter(tau_f);
    std::vector<Vec> out;
    out.reserve(nu_delta.size());
    for (std::size_t i = 0; i < nu_delta.size(); ++i) {
        const double dt = i == 0 ? 0.0 : t[i] - t[i - 1];
        out.push_back(filter.update(nu_delta[i], dt));
    }
    return out;
}

FaultEstimate reconstruct_fault(const CanonicalForm& cf, const Vec& nu_eq) {
    const Mat& D2 = cf.D2;
    if (nu_eq.size() != D2.rows()) {
        throw Error(ErrorCode::InvalidArgument, "nu_eq must have p entries");
    }
    if (rank(D2) != static_cast<std::size_t>(D2.cols())) {
        throw Error(ErrorCode::SingularD2, "D2 is rank deficient");
    }
    const double scale = spectral_norm(D2);
    FaultEstimate est;
    est.nu_eq = nu_eq;
    est.xi_hat_ls = scale * solve_linear(D2.transpose() * D2, D2.transpose() * nu_eq);
    est.xi_hat_projected = D2 * est.xi_hat_ls;
    return est;
}

std::optional<double> detect_sliding(std::span<const double> t, std::span<const double> y_tilde_norm,
                                     const SlidingDetector& detector) {
    if (t.size() != y_tilde_norm.size()) {
        throw Error(ErrorCode::InvalidArgument, "detect_sliding: size mismatch");
    }
    if (!(detector.threshold > 0.0) || !(detector.dwell > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "detect_sliding: threshold and dwell must be positive");
    }
    // Two-pointer sweep: `start` is the first index of the current run of
    // samples below threshold.
    std::optional<std::size_t> start;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (y_tilde_norm[i] <= detector.threshold) {
            if (!start) {
                start = i;
            }
            if (t[i] - t[*start] >= detector.dwell - 1e-12) {
                return t[*start];
            }
        } else {
            start.reset();
        }
    }
    return std::nullopt;
}

} // namespace smobank
