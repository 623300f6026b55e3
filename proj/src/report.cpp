#include "smobank/report.hpp"

#include <cstdio>

namespace smobank {

using nlohmann::json;

json to_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            row.push_back(M(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

json to_json(const std::vector<Complex>& z) {
    json out = json::array();
    for (const auto& s : z) {
        out.push_back({{"re", s.real()}, {"im", s.imag()}});
    }
    return out;
}

json to_json(const FeasibilityReport& r) {
    return {
        {"rank_cd", r.rank_cd},
        {"q", r.q},
        {"rank_ok", r.rank_ok},
        {"observable", r.observable},
        {"zeros_vacuous", r.zeros_vacuous},
        {"invariant_zeros", to_json(r.invariant_zeros)},
        {"zeros_ok", r.zeros_ok},
        {"pass", r.pass},
    };
}

namespace {

json opt(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

json to_json(const TraceMetrics& m) {
    return {
        {"transient_rms", m.transient_rms},
        {"steady_rms", m.steady_rms},
        {"rms", m.rms},
        {"itae", m.itae},
        {"final_error", m.final_error},
        {"max_error_after_transient", m.max_error_after_transient},
        {"onset", opt(m.onset)},
        {"fault_rms", opt(m.fault_rms)},
        {"fault_ratio", opt(m.fault_ratio)},
    };
}

json to_json(const RunReport& r) {
    json out = {{"mu", r.mu}, {"bank", to_json(r.bank)}, {"simplex_exit", opt(r.simplex_exit)}};
    if (r.single) {
        out["single"] = to_json(*r.single);
    }
    return out;
}

json design_report(const CanonicalForm& cf, const ObserverGains& g) {
    return {
        {"J", to_json(cf.J)},
        {"Gl", to_json(g.Gl)},
        {"Gn", to_json(g.Gn)},
        {"P2", to_json(g.P2)},
        {"k", g.diagnostics.k},
        {"lambda", g.diagnostics.lambda},
        {"eig_A0", to_json(eig(g.A0))},
        {"rho", g.rho},
        {"delta", g.delta},
        {"gamma0", g.gamma0},
        {"transformed",
         {
             {"A", to_json(cf.A_full)},
             {"D", to_json(cf.D_full)},
             {"C", to_json(cf.C_full)},
             {"A11", to_json(cf.A11)},
             {"D2", to_json(cf.D2)},
             {"Gl", to_json(Mat(cf.J * g.Gl))},
             {"Gn", to_json(Mat(cf.J * g.Gn))},
         }},
    };
}

json comparison_json(const ComparisonReport& c) {
    json out = to_json(c.run);
    out["single_x0"] = to_json(c.single_x0);
    return out;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) {
        return "-";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

// Smaller is better for every reported metric; a missing value loses.
const char* winner(const std::optional<double>& bank, const std::optional<double>& single) {
    if (!bank && !single) return "-";
    if (!single) return "bank";
    if (!bank) return "single";
    if (*bank < *single) return "bank";
    if (*single < *bank) return "single";
    return "tie";
}

void row(std::string& out, const char* name, const std::optional<double>& b, const std::optional<double>& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-22s %14s %14s  %s\n", name, cell(b).c_str(), cell(s).c_str(), winner(b, s));
    out += buf;
}

} // namespace

std::string comparison_table(const RunReport& r) {
    const TraceMetrics none{};
    const TraceMetrics& s = r.single ? *r.single : none;
    const auto sv = [&](double v) { return r.single ? std::optional<double>(v) : std::nullopt; };

    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "mu = %g\n%-22s %14s %14s  %s\n", r.mu, "metric", "bank", "single", "winner");
    out += buf;
    row(out, "transient_rms [0,2]", r.bank.transient_rms, sv(s.transient_rms));
    row(out, "rms", r.bank.rms, sv(s.rms));
    row(out, "itae", r.bank.itae, sv(s.itae));
    row(out, "steady_rms", r.bank.steady_rms, sv(s.steady_rms));
    row(out, "final_error", r.bank.final_error, sv(s.final_error));
    // onset: earlier is better, a missing onset never wins
    row(out, "onset", r.bank.onset, r.single ? s.onset : std::nullopt);
    row(out, "fault_rms", r.bank.fault_rms, r.single ? s.fault_rms : std::nullopt);
    if (r.simplex_exit) {
        std::snprintf(buf, sizeof buf, "note: weights left the simplex at t = %g\n", *r.simplex_exit);
        out += buf;
    }
    return out;
}

bool transient_nonincreasing(std::span<const RunReport> sweep) {
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (sweep[i].bank.transient_rms > sweep[i - 1].bank.transient_rms) {
            return false;
        }
    }
    return true;
}

json sweep_json(std::span<const RunReport> sweep) {
    json runs = json::array();
    for (const auto& r : sweep) {
        runs.push_back(to_json(r));
    }
    return {{"runs", runs}, {"transient_nonincreasing", transient_nonincreasing(sweep)}};
}

std::string sweep_table(std::span<const RunReport> sweep) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %14s %14s %10s %12s\n", "mu", "transient_rms", "rms", "onset", "fault_ratio");
    out += buf;
    for (const auto& r : sweep) {
        std::snprintf(buf, sizeof buf, "%-12g %14.6g %14.6g %10s %12s\n", r.mu, r.bank.transient_rms, r.bank.rms,
                      cell(r.bank.onset).c_str(), cell(r.bank.fault_ratio).c_str());
        out += buf;
    }
    out += transient_nonincreasing(sweep) ? "transient RMS non-increasing in mu: yes\n"
                                          : "transient RMS non-increasing in mu: NO\n";
    return out;
}

} // namespace smobank
