#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smobank/simlab.hpp"

// trace.csv: one header row, then one row per logged sample:
//   t, x1..xn, xo1..xon, [xs1..xsn], alpha1..alphaN, nu1..nup, xi1..xiq,
//   xihat1..xihatq, ytilde_norm
// Values use 17 significant digits so a read reproduces the doubles exactly.
namespace smobank {

[[nodiscard]] std::vector<std::string> trace_header(const SimTrace& tr);

void write_trace_csv(std::ostream& os, const SimTrace& tr);
void write_trace_csv(const std::filesystem::path& path, const SimTrace& tr);

// Dimensions are recovered from the header. Throws Error(Schema) on a
// malformed file.
[[nodiscard]] SimTrace read_trace_csv(std::istream& is);
[[nodiscard]] SimTrace read_trace_csv(const std::filesystem::path& path);

} // namespace smobank
