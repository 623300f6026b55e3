#pragma once

#include <span>
#include <string>

#include <json.hpp>

#include "smobank/simlab.hpp"

namespace smobank {

[[nodiscard]] nlohmann::json to_json(const Mat& M);   // row-major nested arrays
[[nodiscard]] nlohmann::json to_json(const Vec& v);
[[nodiscard]] nlohmann::json to_json(const std::vector<Complex>& z); // [{re, im}, ...]

[[nodiscard]] nlohmann::json to_json(const FeasibilityReport& r);
[[nodiscard]] nlohmann::json to_json(const TraceMetrics& m);
[[nodiscard]] nlohmann::json to_json(const RunReport& r);

// J, Gl, Gn, P2, k, lambda, eig(A0), plus the transformed blocks and the
// gains expressed in the transformed coordinates (J Gl, J Gn).
[[nodiscard]] nlohmann::json design_report(const CanonicalForm& cf, const ObserverGains& g);

[[nodiscard]] nlohmann::json comparison_json(const ComparisonReport& c);

// Fixed-width table, bank vs single SMO, one row per metric with the winner.
[[nodiscard]] std::string comparison_table(const RunReport& r);

// Transient RMS of the bank must not increase with mu (reports sorted by mu).
[[nodiscard]] bool transient_nonincreasing(std::span<const RunReport> sweep);

[[nodiscard]] nlohmann::json sweep_json(std::span<const RunReport> sweep);
[[nodiscard]] std::string sweep_table(std::span<const RunReport> sweep);

} // namespace smobank
