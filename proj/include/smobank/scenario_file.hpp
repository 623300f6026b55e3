#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smobank/simlab.hpp"

// JSON scenario documents. Parsing is strict: unknown keys, wrong types and
// inconsistent dimensions are reported as ErrorCode::Schema.
namespace smobank {

struct DesignSpec {
    Mat A22s;
    Mat Q2;
    double rho = 10.0;
    double delta = 0.01;
    double gamma0_min = kDefaultGammaMargin;
    std::vector<Complex> A11_poles;
    std::optional<Mat> J;
    std::uint64_t seed = 1;
};

struct BankSpec {
    std::optional<Mat> initial_states; // n x N
    bool auto_hull = false;
    double state_bound = 1.0;
    std::optional<Eigen::Index> N;
    std::optional<Vec> alpha0;
    double mu = 100.0;
    bool allow_degenerate = false;
};

struct ScenarioFile {
    UncertainSystem system;
    std::string fault_kind; // "zero" | "mck" | "constant" | "sine"
    FaultFn fault;
    InputFn input;
    Vec x0;
    DesignSpec design;
    BankSpec bank;
    double t_end = 10.0;
    double dt = 1e-4;
    double log_interval = 1e-3;
    Method method = Method::rk4;
    RlsForm rls_form = RlsForm::information;
    double tau_f = 0.0;
    SlidingDetector sliding;
    bool compare_single = false;
    std::optional<Vec> single_x0;
    std::vector<double> mu_list;
};

[[nodiscard]] ScenarioFile parse_scenario(const nlohmann::json& doc);
[[nodiscard]] ScenarioFile load_scenario_file(const std::filesystem::path& path);

struct Design {
    CanonicalForm canonical;
    ObserverGains gains;
};

[[nodiscard]] Design run_design(const ScenarioFile& file);

[[nodiscard]] BankConfig build_bank_config(const ScenarioFile& file);

[[nodiscard]] Scenario build_scenario(const ScenarioFile& file, const Design& design);

} // namespace smobank
