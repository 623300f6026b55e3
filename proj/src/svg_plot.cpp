#include "smobank/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace smobank {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0; // legend strip
constexpr double kTop = 30.0;
constexpr double kBottom = 30.0;
constexpr double kGap = 18.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::pair<double, double> padded_range(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        return {-1.0, 1.0};
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        const double pad = std::max(1e-3, 0.1 * std::abs(hi));
        return {lo - pad, hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::string render_svg(const std::string& title, const std::vector<double>& t,
                       const std::vector<PlotPanel>& panels) {
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
    out += "<text x=\"400\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">" +
           escape(title) + "</text>\n";
    if (t.empty() || panels.empty()) {
        out += "</svg>\n";
        return out;
    }

    const std::size_t stride = std::max<std::size_t>(1, (t.size() + kMaxPlotPoints - 1) / kMaxPlotPoints);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < t.size(); k += stride) {
        idx.push_back(k);
    }
    if (idx.back() != t.size() - 1) {
        idx.push_back(t.size() - 1);
    }

    const double t0 = t.front();
    const double t1 = t.back() > t0 ? t.back() : t0 + 1.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double panel_h =
        (kHeight - kTop - kBottom - kGap * static_cast<double>(panels.size() - 1)) / static_cast<double>(panels.size());
    const auto px = [&](double tv) { return kLeft + (tv - t0) / (t1 - t0) * plot_w; };

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const PlotPanel& panel = panels[pi];
        const double top = kTop + static_cast<double>(pi) * (panel_h + kGap);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& s : panel.series) {
            for (std::size_t k : idx) {
                if (k < s.y.size() && std::isfinite(s.y[k])) {
                    lo = std::min(lo, s.y[k]);
                    hi = std::max(hi, s.y[k]);
                }
            }
        }
        const auto [ylo, yhi] = padded_range(lo, hi);
        const auto py = [&](double yv) { return top + (yhi - yv) / (yhi - ylo) * panel_h; };

        out += "<g>\n";
        out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(top) + "\" width=\"" + num(plot_w) + "\" height=\"" +
               num(panel_h) + "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + num(kLeft + 4) + "\" y=\"" + num(top + 12) +
               "\" font-size=\"11\" font-family=\"sans-serif\">" + escape(panel.title) + "</text>\n";
        out += "<text x=\"" + num(kLeft - 4) + "\" y=\"" + num(top + 10) +
               "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" + tick(yhi) + "</text>\n";
        out += "<text x=\"" + num(kLeft - 4) + "\" y=\"" + num(top + panel_h) +
               "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" + tick(ylo) + "</text>\n";
        if (ylo < 0.0 && yhi > 0.0) {
            out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" + num(kLeft + plot_w) +
                   "\" y2=\"" + num(py(0.0)) + "\" stroke=\"#bbb\" stroke-width=\"0.5\"/>\n";
        }

        for (std::size_t si = 0; si < panel.series.size(); ++si) {
            const PlotSeries& s = panel.series[si];
            const char* color = kPalette[si % kPalette.size()];
            out += "<polyline data-column=\"" + escape(s.column) + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"1.2\"";
            if (s.dashed) {
                out += " stroke-dasharray=\"5,3\"";
            }
            out += " points=\"";
            bool first = true;
            for (std::size_t k : idx) {
                if (k >= s.y.size() || !std::isfinite(s.y[k])) {
                    continue;
                }
                if (!first) out += ' ';
                out += num(px(t[k])) + ',' + num(py(s.y[k]));
                first = false;
            }
            out += "\"/>\n";
            const double ly = top + 14.0 + 14.0 * static_cast<double>(si);
            out += "<line x1=\"" + num(kWidth - kRight + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
                   num(kWidth - kRight + 30) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\"/>\n";
            out += "<text x=\"" + num(kWidth - kRight + 34) + "\" y=\"" + num(ly) +
                   "\" font-size=\"10\" font-family=\"sans-serif\">" + escape(s.label) + "</text>\n";
        }
        out += "</g>\n";
    }
    const double base = kHeight - kBottom;
    out += "<text x=\"" + num(kLeft) + "\" y=\"" + num(base + 16) +
           "\" font-size=\"10\" font-family=\"sans-serif\">" + tick(t0) + "</text>\n";
    out += "<text x=\"" + num(kLeft + plot_w) + "\" y=\"" + num(base + 16) +
           "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" + tick(t1) + "</text>\n";
    out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(base + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">t [s]</text>\n";
    out += "</svg>\n";
    return out;
}

namespace {

std::vector<double> component(const std::vector<Vec>& series, Eigen::Index i) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& v : series) {
        out.push_back(v(i));
    }
    return out;
}

} // namespace

std::string states_svg(const SimTrace& tr) {
    std::vector<PlotPanel> panels;
    for (Eigen::Index i = 0; i < tr.n; ++i) {
        const auto k = std::to_string(i + 1);
        PlotPanel p{"x" + k, {}};
        p.series.push_back({"x" + k, "x" + k, component(tr.x, i), false});
        p.series.push_back({"xo" + k, "xo" + k + " (bank)", component(tr.xo, i), true});
        if (tr.has_single) {
            p.series.push_back({"xs" + k, "xs" + k + " (single)", component(tr.x_single, i), true});
        }
        panels.push_back(std::move(p));
    }
    return render_svg("states and estimates", tr.t, panels);
}

std::string fault_svg(const SimTrace& tr) {
    std::vector<PlotPanel> panels;
    for (Eigen::Index i = 0; i < tr.q; ++i) {
        const auto k = std::to_string(i + 1);
        PlotPanel p{"xi" + k, {}};
        p.series.push_back({"xi" + k, "xi" + k, component(tr.xi_true, i), false});
        p.series.push_back({"xihat" + k, "xihat" + k, component(tr.xi_hat, i), true});
        panels.push_back(std::move(p));
    }
    return render_svg("unknown input and its reconstruction", tr.t, panels);
}

std::string weights_svg(const SimTrace& tr) {
    PlotPanel p{"alpha", {}};
    for (Eigen::Index i = 0; i < tr.N; ++i) {
        const auto k = std::to_string(i + 1);
        p.series.push_back({"alpha" + k, "alpha" + k, component(tr.alpha, i), false});
    }
    return render_svg("combination weights", tr.t, {p});
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    }
    os << text;
    if (!os) {
        throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
    }
}

} // namespace smobank
