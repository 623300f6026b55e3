#include "smobank/scenario_file.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace smobank {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& msg) {
    throw Error(ErrorCode::Schema, where + ": " + msg);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        schema_error(where, "expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            schema_error(where, "unknown key '" + key + "'");
        }
    }
}

double get_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        schema_error(where, "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        schema_error(where, "non-finite number");
    }
    return d;
}

bool get_bool(const json& v, const std::string& where) {
    if (!v.is_boolean()) {
        schema_error(where, "expected a boolean");
    }
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where) {
    if (!v.is_string()) {
        schema_error(where, "expected a string");
    }
    return v.get<std::string>();
}

Vec get_vector(const json& v, const std::string& where) {
    if (!v.is_array()) {
        schema_error(where, "expected an array of numbers");
    }
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = get_number(v[i], where + "[" + std::to_string(i) + "]");
    }
    return out;
}

// Row-major nested arrays. An empty outer array with explicit `cols` is a
// matrix with zero rows.
Mat get_matrix(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) {
        schema_error(where, "expected a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(v.size());
    if (!v[0].is_array()) {
        schema_error(where, "expected rows to be arrays");
    }
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    Mat M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Vec row = get_vector(v[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
        if (row.size() != cols) {
            schema_error(where, "ragged matrix");
        }
        M.row(i) = row.transpose();
    }
    return M;
}

std::vector<Complex> get_poles(const json& v, const std::string& where) {
    if (!v.is_array()) {
        schema_error(where, "expected an array of poles");
    }
    std::vector<Complex> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& e = v[i];
        const std::string w = where + "[" + std::to_string(i) + "]";
        if (e.is_number()) {
            out.emplace_back(get_number(e, w), 0.0);
        } else if (e.is_array() && e.size() == 2) {
            out.emplace_back(get_number(e[0], w), get_number(e[1], w));
        } else {
            schema_error(w, "pole must be a number or [re, im]");
        }
    }
    return out;
}

struct SystemPart {
    std::optional<UncertainSystem> system;
    std::string fault_kind = "zero";
    FaultFn fault;
    bool is_mck = false;
};

FaultFn make_fault(const json& f, Eigen::Index q, std::string& kind) {
    check_keys(f, "system.fault", {"type", "value", "amplitude", "frequency"});
    if (!f.contains("type")) {
        schema_error("system.fault", "missing 'type'");
    }
    kind = get_string(f["type"], "system.fault.type");
    if (kind == "zero") {
        return {};
    }
    if (kind == "mck") {
        if (q != 1) {
            schema_error("system.fault", "the mck fault is scalar (q = 1)");
        }
        return mck_fault_fn();
    }
    if (kind == "constant") {
        if (!f.contains("value")) schema_error("system.fault", "constant fault needs 'value'");
        const Vec value = get_vector(f["value"], "system.fault.value");
        if (value.size() != q) schema_error("system.fault.value", "must have q entries");
        return [value](double, const Vec&, const Vec&) { return value; };
    }
    if (kind == "sine") {
        if (!f.contains("amplitude") || !f.contains("frequency")) {
            schema_error("system.fault", "sine fault needs 'amplitude' and 'frequency'");
        }
        const Vec amp = get_vector(f["amplitude"], "system.fault.amplitude");
        const double freq = get_number(f["frequency"], "system.fault.frequency");
        if (amp.size() != q) schema_error("system.fault.amplitude", "must have q entries");
        return [amp, freq](double t, const Vec&, const Vec&) -> Vec {
            return amp * std::sin(2.0 * 3.14159265358979323846 * freq * t);
        };
    }
    schema_error("system.fault.type", "unknown fault type '" + kind + "'");
}

SystemPart parse_system(const json& s) {
    SystemPart part;
    if (s.is_string()) {
        if (s.get<std::string>() != "mck") {
            schema_error("system", "unknown named system '" + s.get<std::string>() + "'");
        }
        part.system = mck_system();
        part.fault = mck_fault_fn();
        part.fault_kind = "mck";
        part.is_mck = true;
        return part;
    }
    check_keys(s, "system", {"model", "xi_bar", "A", "B", "C", "D", "fault"});
    if (s.contains("model")) {
        const auto model = get_string(s["model"], "system.model");
        if (model != "mck") {
            schema_error("system.model", "unknown model '" + model + "'");
        }
        for (const char* k : {"A", "B", "C", "D", "fault"}) {
            if (s.contains(k)) schema_error("system", std::string("'") + k + "' cannot be combined with 'model'");
        }
        const double xi_bar = s.contains("xi_bar") ? get_number(s["xi_bar"], "system.xi_bar") : 0.4;
        part.system = mck_system(xi_bar);
        part.fault = mck_fault_fn();
        part.fault_kind = "mck";
        part.is_mck = true;
        return part;
    }
    for (const char* k : {"A", "C", "D", "xi_bar"}) {
        if (!s.contains(k)) schema_error("system", std::string("missing '") + k + "'");
    }
    const Mat A = get_matrix(s["A"], "system.A");
    const Mat C = get_matrix(s["C"], "system.C");
    const Mat D = get_matrix(s["D"], "system.D");
    const Mat B = s.contains("B") ? get_matrix(s["B"], "system.B") : Mat::Zero(A.rows(), 1);
    const double xi_bar = get_number(s["xi_bar"], "system.xi_bar");
    try {
        part.system.emplace(A, B, C, D, xi_bar);
    } catch (const Error& e) {
        schema_error("system", e.what());
    }
    if (s.contains("fault")) {
        part.fault = make_fault(s["fault"], D.cols(), part.fault_kind);
    }
    return part;
}

} // namespace

ScenarioFile parse_scenario(const json& doc) {
    check_keys(doc, "scenario", {"system", "x0", "input", "design", "bank", "sim", "sliding", "compare_single",
                                 "single_x0", "mu_list"});
    if (!doc.contains("system")) {
        schema_error("scenario", "missing 'system'");
    }
    SystemPart sp = parse_system(doc["system"]);
    const UncertainSystem& sys = *sp.system;
    const auto n = sys.n();
    const auto p = sys.p();

    ScenarioFile f{*sp.system};
    f.fault = sp.fault;
    f.fault_kind = sp.fault_kind;

    if (doc.contains("x0")) {
        f.x0 = get_vector(doc["x0"], "x0");
    } else if (sp.is_mck) {
        f.x0 = mck_reference_x0();
    } else {
        schema_error("scenario", "missing 'x0'");
    }
    if (f.x0.size() != n) schema_error("x0", "must have n entries");

    if (doc.contains("input")) {
        const auto& in = doc["input"];
        check_keys(in, "input", {"type", "value"});
        const auto type = in.contains("type") ? get_string(in["type"], "input.type") : std::string("zero");
        if (type == "constant") {
            if (!in.contains("value")) schema_error("input", "constant input needs 'value'");
            const Vec value = get_vector(in["value"], "input.value");
            if (value.size() != sys.m()) schema_error("input.value", "must have m entries");
            f.input = [value](double) { return value; };
        } else if (type != "zero") {
            schema_error("input.type", "unknown input type '" + type + "'");
        }
    }

    // design
    DesignSpec& d = f.design;
    d.A22s = -10.0 * Mat::Identity(p, p);
    d.Q2 = default_Q2(p);
    if (sp.is_mck) {
        d.A11_poles = mck_reference_poles();
    }
    if (doc.contains("design")) {
        const auto& ds = doc["design"];
        check_keys(ds, "design", {"A22s", "Q2", "rho", "delta", "gamma0_min", "A11_poles", "J", "seed"});
        if (ds.contains("A22s")) d.A22s = get_matrix(ds["A22s"], "design.A22s");
        if (ds.contains("Q2")) d.Q2 = get_matrix(ds["Q2"], "design.Q2");
        if (ds.contains("rho")) d.rho = get_number(ds["rho"], "design.rho");
        if (ds.contains("delta")) d.delta = get_number(ds["delta"], "design.delta");
        if (ds.contains("gamma0_min")) d.gamma0_min = get_number(ds["gamma0_min"], "design.gamma0_min");
        if (ds.contains("A11_poles")) d.A11_poles = get_poles(ds["A11_poles"], "design.A11_poles");
        if (ds.contains("J")) {
            if (ds["J"].is_string()) {
                if (ds["J"].get<std::string>() != "reference" || !sp.is_mck) {
                    schema_error("design.J", "only \"reference\" is accepted as a named transform (mck only)");
                }
                d.J = mck_reference_transform();
            } else {
                d.J = get_matrix(ds["J"], "design.J");
            }
        }
        if (ds.contains("seed")) {
            const double s = get_number(ds["seed"], "design.seed");
            if (s < 0 || s != std::floor(s)) schema_error("design.seed", "must be a nonnegative integer");
            d.seed = static_cast<std::uint64_t>(s);
        }
    }
    if (d.A22s.rows() != p || d.A22s.cols() != p) schema_error("design.A22s", "must be p x p");
    if (d.Q2.rows() != p || d.Q2.cols() != p) schema_error("design.Q2", "must be p x p");
    if (d.J && (d.J->rows() != n || d.J->cols() != n)) schema_error("design.J", "must be n x n");
    if (!d.J && static_cast<Eigen::Index>(d.A11_poles.size()) != n - p) {
        schema_error("design.A11_poles", "need n - p poles when no J is given");
    }

    // bank
    BankSpec& b = f.bank;
    if (sp.is_mck) {
        b.initial_states = mck_reference_initial_states();
        b.alpha0 = mck_reference_alpha0();
    }
    if (doc.contains("bank")) {
        const auto& bs = doc["bank"];
        check_keys(bs, "bank", {"N", "initial_states", "state_bound", "alpha0", "mu", "allow_degenerate"});
        if (bs.contains("N")) {
            const double N = get_number(bs["N"], "bank.N");
            if (N < 1 || N != std::floor(N)) schema_error("bank.N", "must be a positive integer");
            b.N = static_cast<Eigen::Index>(N);
        }
        if (bs.contains("initial_states")) {
            const auto& is = bs["initial_states"];
            if (is.is_string()) {
                if (is.get<std::string>() != "auto-hull") schema_error("bank.initial_states", "expected \"auto-hull\"");
                b.auto_hull = true;
                b.initial_states.reset();
            } else {
                // listed one state per row
                b.initial_states = get_matrix(is, "bank.initial_states").transpose();
                b.auto_hull = false;
            }
        }
        if (bs.contains("state_bound")) b.state_bound = get_number(bs["state_bound"], "bank.state_bound");
        if (bs.contains("alpha0")) b.alpha0 = get_vector(bs["alpha0"], "bank.alpha0");
        if (bs.contains("mu")) b.mu = get_number(bs["mu"], "bank.mu");
        if (bs.contains("allow_degenerate")) {
            b.allow_degenerate = get_bool(bs["allow_degenerate"], "bank.allow_degenerate");
        }
    }
    if (!b.auto_hull && !b.initial_states) {
        schema_error("bank", "need 'initial_states' (list of vectors or \"auto-hull\")");
    }
    if (b.initial_states) {
        if (b.initial_states->rows() != n) schema_error("bank.initial_states", "each state must have n entries");
        if (b.N && *b.N != b.initial_states->cols()) schema_error("bank.N", "does not match initial_states");
    }
    if (b.auto_hull && !b.N) {
        b.N = n + 1;
    }
    {
        const Eigen::Index N = b.initial_states ? b.initial_states->cols() : *b.N;
        if (b.alpha0 && b.alpha0->size() != N - 1) schema_error("bank.alpha0", "must have N - 1 entries");
    }

    if (doc.contains("sim")) {
        const auto& s = doc["sim"];
        check_keys(s, "sim", {"t_end", "dt", "method", "log_interval", "rls_form", "tau_f"});
        if (s.contains("t_end")) f.t_end = get_number(s["t_end"], "sim.t_end");
        if (s.contains("dt")) f.dt = get_number(s["dt"], "sim.dt");
        if (s.contains("log_interval")) f.log_interval = get_number(s["log_interval"], "sim.log_interval");
        if (s.contains("tau_f")) f.tau_f = get_number(s["tau_f"], "sim.tau_f");
        if (s.contains("method")) {
            const auto m = get_string(s["method"], "sim.method");
            if (m == "rk4") f.method = Method::rk4;
            else if (m == "euler") f.method = Method::euler;
            else schema_error("sim.method", "expected \"rk4\" or \"euler\"");
        }
        if (s.contains("rls_form")) {
            const auto m = get_string(s["rls_form"], "sim.rls_form");
            if (m == "information") f.rls_form = RlsForm::information;
            else if (m == "covariance") f.rls_form = RlsForm::covariance;
            else schema_error("sim.rls_form", "expected \"information\" or \"covariance\"");
        }
    }
    if (!(f.dt > 0.0) || !(f.t_end > f.dt) || !(f.log_interval > 0.0) || !(f.tau_f >= 0.0)) {
        schema_error("sim", "need dt > 0, t_end > dt, log_interval > 0, tau_f >= 0");
    }

    if (doc.contains("sliding")) {
        const auto& s = doc["sliding"];
        check_keys(s, "sliding", {"threshold", "dwell"});
        if (s.contains("threshold")) f.sliding.threshold = get_number(s["threshold"], "sliding.threshold");
        if (s.contains("dwell")) f.sliding.dwell = get_number(s["dwell"], "sliding.dwell");
        if (!(f.sliding.threshold > 0.0) || !(f.sliding.dwell > 0.0)) {
            schema_error("sliding", "threshold and dwell must be positive");
        }
    }
    if (doc.contains("compare_single")) f.compare_single = get_bool(doc["compare_single"], "compare_single");
    if (doc.contains("single_x0")) {
        f.single_x0 = get_vector(doc["single_x0"], "single_x0");
        if (f.single_x0->size() != n) schema_error("single_x0", "must have n entries");
    }
    if (doc.contains("mu_list")) {
        const Vec mus = get_vector(doc["mu_list"], "mu_list");
        if (mus.size() == 0) schema_error("mu_list", "must not be empty");
        for (Eigen::Index i = 0; i < mus.size(); ++i) {
            if (!(mus(i) > 0.0)) schema_error("mu_list", "entries must be positive");
            f.mu_list.push_back(mus(i));
        }
    }
    return f;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Schema, "cannot open scenario file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Schema, std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

Design run_design(const ScenarioFile& file) {
    const auto& d = file.design;
    CanonicalForm cf = to_canonical(file.system, d.A11_poles, d.J, d.seed);
    ObserverGains g = design_gains(file.system, cf, d.A22s, d.Q2, d.rho, d.delta, d.gamma0_min);
    return {std::move(cf), std::move(g)};
}

BankConfig build_bank_config(const ScenarioFile& file) {
    const auto& b = file.bank;
    const auto n = file.system.n();
    BankConfig cfg;
    cfg.initial_states = b.initial_states ? *b.initial_states : auto_hull_vertices(n, *b.N, b.state_bound);
    const auto N = cfg.initial_states.cols();
    cfg.alpha0 = b.alpha0 ? *b.alpha0 : Vec::Constant(N - 1, 1.0 / static_cast<double>(N));
    cfg.mu = b.mu;
    cfg.allow_degenerate = b.allow_degenerate;
    return cfg;
}

Scenario build_scenario(const ScenarioFile& file, const Design& design) {
    Scenario sc{file.system, design.canonical, design.gains, build_bank_config(file), file.x0};
    sc.fault = file.fault;
    sc.input = file.input;
    sc.t_end = file.t_end;
    sc.dt = file.dt;
    sc.log_interval = file.log_interval;
    sc.method = file.method;
    sc.rls_form = file.rls_form;
    sc.compare_single = file.compare_single;
    sc.single_x0 = file.single_x0;
    sc.mu_list = file.mu_list;
    sc.sliding = file.sliding;
    sc.tau_f = file.tau_f;
    return sc;
}

} // namespace smobank
