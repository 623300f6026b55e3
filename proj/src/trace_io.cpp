#include "smobank/trace_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace smobank {

namespace {

void add_cols(std::vector<std::string>& h, const char* prefix, Eigen::Index count) {
    for (Eigen::Index i = 1; i <= count; ++i) {
        h.push_back(prefix + std::to_string(i));
    }
}

void put(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    line += ',';
    line += buf;
}

void put(std::string& line, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        put(line, v(i));
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

Eigen::Index count_prefix(const std::vector<std::string>& h, std::size_t& pos, const std::string& prefix) {
    Eigen::Index k = 0;
    while (pos < h.size() && h[pos] == prefix + std::to_string(k + 1)) {
        ++k;
        ++pos;
    }
    return k;
}

double parse_double(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    // subnormal results also set ERANGE; only overflow is an error
    if (s.empty() || end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v))) {
        throw Error(ErrorCode::Schema, "trace csv: bad number '" + s + "'");
    }
    return v;
}

} // namespace

std::vector<std::string> trace_header(const SimTrace& tr) {
    std::vector<std::string> h{"t"};
    add_cols(h, "x", tr.n);
    add_cols(h, "xo", tr.n);
    if (tr.has_single) {
        add_cols(h, "xs", tr.n);
    }
    add_cols(h, "alpha", tr.N);
    add_cols(h, "nu", tr.p);
    add_cols(h, "xi", tr.q);
    add_cols(h, "xihat", tr.q);
    h.emplace_back("ytilde_norm");
    return h;
}

void write_trace_csv(std::ostream& os, const SimTrace& tr) {
    const auto header = trace_header(tr);
    for (std::size_t i = 0; i < header.size(); ++i) {
        os << (i ? "," : "") << header[i];
    }
    os << '\n';
    std::string line;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        line.clear();
        put(line, tr.t[k]);
        put(line, tr.x[k]);
        put(line, tr.xo[k]);
        if (tr.has_single) {
            put(line, tr.x_single[k]);
        }
        put(line, tr.alpha[k]);
        put(line, tr.nu[k]);
        put(line, tr.xi_true[k]);
        put(line, tr.xi_hat[k]);
        put(line, tr.ytilde_norm[k]);
        os << line.substr(1) << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const SimTrace& tr) {
    std::ofstream os(path);
    if (!os) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    }
    write_trace_csv(os, tr);
    if (!os) {
        throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
    }
}

SimTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw Error(ErrorCode::Schema, "trace csv: missing header");
    }
    const auto h = split(line);
    std::size_t pos = 0;
    if (h.empty() || h[pos++] != "t") {
        throw Error(ErrorCode::Schema, "trace csv: first column must be t");
    }
    SimTrace tr;
    tr.n = count_prefix(h, pos, "x");
    if (count_prefix(h, pos, "xo") != tr.n) {
        throw Error(ErrorCode::Schema, "trace csv: xo columns do not match x");
    }
    const auto ns = count_prefix(h, pos, "xs");
    if (ns != 0 && ns != tr.n) {
        throw Error(ErrorCode::Schema, "trace csv: xs columns do not match x");
    }
    tr.has_single = ns != 0;
    tr.N = count_prefix(h, pos, "alpha");
    tr.p = count_prefix(h, pos, "nu");
    tr.q = count_prefix(h, pos, "xi");
    if (count_prefix(h, pos, "xihat") != tr.q) {
        throw Error(ErrorCode::Schema, "trace csv: xihat columns do not match xi");
    }
    if (pos + 1 != h.size() || h[pos] != "ytilde_norm") {
        throw Error(ErrorCode::Schema, "trace csv: unexpected trailing columns");
    }

    const auto take = [](const std::vector<std::string>& f, std::size_t& at, Eigen::Index count) {
        Vec v(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            v(i) = parse_double(f[at++]);
        }
        return v;
    };
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != h.size()) {
            throw Error(ErrorCode::Schema, "trace csv: row width differs from header");
        }
        std::size_t at = 0;
        tr.t.push_back(parse_double(f[at++]));
        tr.x.push_back(take(f, at, tr.n));
        tr.xo.push_back(take(f, at, tr.n));
        if (tr.has_single) {
            tr.x_single.push_back(take(f, at, tr.n));
        }
        tr.alpha.push_back(take(f, at, tr.N));
        tr.nu.push_back(take(f, at, tr.p));
        tr.xi_true.push_back(take(f, at, tr.q));
        tr.xi_hat.push_back(take(f, at, tr.q));
        tr.ytilde_norm.push_back(parse_double(f[at++]));
    }
    return tr;
}

SimTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw Error(ErrorCode::Schema, "cannot open " + path.string());
    }
    return read_trace_csv(is);
}

} // namespace smobank
