#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smobank/design.hpp"

namespace smobank {

struct FaultEstimate {
    double t = 0.0;
    Vec nu_eq;            // p
    Vec xi_hat_ls;        // q: ||D2|| (D2^T D2)^-1 D2^T nu_eq
    Vec xi_hat_projected; // p: D2 * xi_hat_ls
    bool sliding = false;
};

// First-order low-pass applied per component. tau = 0 is a pass-through.
class EquivalentSignalFilter {
public:
    explicit EquivalentSignalFilter(double tau_f = 0.0);

    Vec update(const Vec& nu_delta, double dt);
    void reset() { state_.reset(); }

private:
    double tau_;
    std::optional<Vec> state_;
};

// Filters a sampled stream; times must be nondecreasing.
[[nodiscard]] std::vector<Vec> equivalent_signal(std::span<const Vec> nu_delta, std::span<const double> t,
                                                 double tau_f = 0.0);

// Both reconstructions of the unknown input from the equivalent injection.
// Throws SingularD2 if D2 has rank below q.
[[nodiscard]] FaultEstimate reconstruct_fault(const CanonicalForm& cf, const Vec& nu_eq);

struct SlidingDetector {
    double threshold = 1e-2;
    double dwell = 0.5;
};

// Earliest sample time t such that every sample in [t, t + dwell] has
// ||y_tilde|| <= threshold. The window must be fully covered by the stream.
[[nodiscard]] std::optional<double> detect_sliding(std::span<const double> t, std::span<const double> y_tilde_norm,
                                                   const SlidingDetector& detector = {});

} // namespace smobank
