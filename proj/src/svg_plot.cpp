#include "svg_plot.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace phenoflow {

std::string category_color(Category category) {
    switch (category) {
        case Category::A: return "#1f77b4";
        case Category::B: return "#d62728";
        case Category::C: return "#e6c229";
        case Category::D: return "#2ca02c";
        case Category::E: return "#ff7f0e";
    }
    return "#1f77b4";
}

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 60;
constexpr int kRight = 20;
constexpr int kTop = 40;
constexpr int kBottom = 50;

std::string fmt(double v, int prec = 2) {
    std::ostringstream oss;
    oss.setf(std::ios::fixed);
    oss.precision(prec);
    oss << v;
    return oss.str();
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
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

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<style>\n"
           "  .axis { stroke:#000; stroke-width:1; }\n"
           "  .label { font-family:sans-serif; font-size:11px; fill:#000; }\n"
           "  .title { font-family:sans-serif; font-size:14px; fill:#000; }\n"
           "</style>\n";
    out << "<text class=\"title\" x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\">"
        << escape_xml(title) << "</text>\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(Errc::io_error, "cannot write " + path);
    }
    out << content;
}

struct LinearScale {
    double lo = 0.0;
    double hi = 1.0;
    double pix_lo = 0.0;
    double pix_hi = 1.0;

    double operator()(double v) const {
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

void draw_axes(std::ostringstream& out, const LinearScale& xs, const LinearScale& ys,
               const std::string& x_label, const std::string& y_label, int n_ticks = 6) {
    out << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom
        << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << kHeight - kBottom << "\"/>\n";
    out << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
        << "\" y2=\"" << kHeight - kBottom << "\"/>\n";
    for (int i = 0; i <= n_ticks; ++i) {
        double fx = xs.lo + (xs.hi - xs.lo) * i / n_ticks;
        double px = xs(fx);
        out << "<line class=\"axis\" x1=\"" << fmt(px) << "\" y1=\"" << kHeight - kBottom
            << "\" x2=\"" << fmt(px) << "\" y2=\"" << kHeight - kBottom + 4 << "\"/>\n";
        out << "<text class=\"label\" x=\"" << fmt(px) << "\" y=\"" << kHeight - kBottom + 16
            << "\" text-anchor=\"middle\">" << fmt(fx, 1) << "</text>\n";
        double fy = ys.lo + (ys.hi - ys.lo) * i / n_ticks;
        double py = ys(fy);
        out << "<line class=\"axis\" x1=\"" << kLeft - 4 << "\" y1=\"" << fmt(py) << "\" x2=\""
            << kLeft << "\" y2=\"" << fmt(py) << "\"/>\n";
        out << "<text class=\"label\" x=\"" << kLeft - 6 << "\" y=\"" << fmt(py + 3)
            << "\" text-anchor=\"end\">" << fmt(fy, 2) << "</text>\n";
    }
    out << "<text class=\"label\" x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
        << kHeight - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
    out << "<text class=\"label\" x=\"14\" y=\"" << (kTop + kHeight - kBottom) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << (kTop + kHeight - kBottom) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
}

} // namespace

void write_season_svg(const std::string& path, const SeasonPlot& plot) {
    double x_lo = 0.0, x_hi = 52.0, y_lo = 0.0, y_hi = 1.0;
    for (const auto& [w, v] : plot.samples) {
        x_lo = std::min(x_lo, w);
        x_hi = std::max(x_hi, w);
        y_lo = std::min(y_lo, v - 0.05);
        y_hi = std::max(y_hi, v + 0.05);
    }
    LinearScale xs{x_lo, x_hi, static_cast<double>(kLeft), static_cast<double>(kWidth - kRight)};
    LinearScale ys{y_lo, y_hi, static_cast<double>(kHeight - kBottom), static_cast<double>(kTop)};

    std::ostringstream out;
    open_svg(out, plot.title);
    draw_axes(out, xs, ys, "week", "NDVI");

    if (plot.curve.size() > 1) {
        out << "<polyline fill=\"none\" stroke=\"" << plot.color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [w, v] : plot.curve) out << fmt(xs(w)) << "," << fmt(ys(v)) << " ";
        out << "\"/>\n";
    }
    for (const auto& [w, v] : plot.samples) {
        out << "<circle cx=\"" << fmt(xs(w)) << "\" cy=\"" << fmt(ys(v))
            << "\" r=\"3\" fill=\"#333\"/>\n";
    }
    auto marker = [&](double week, const char* color, const char* name) {
        if (week < x_lo || week > x_hi) return;
        out << "<line x1=\"" << fmt(xs(week)) << "\" y1=\"" << kTop << "\" x2=\"" << fmt(xs(week))
            << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"" << color
            << "\" stroke-dasharray=\"4 3\"/>\n";
        out << "<text class=\"label\" x=\"" << fmt(xs(week) + 3) << "\" y=\"" << kTop + 12
            << "\" fill=\"" << color << "\">" << name << "</text>\n";
    };
    if (plot.sos >= 0.0) marker(plot.sos, "#d62728", "SOS");
    if (plot.pos >= 0.0) marker(plot.pos, "#555555", "POS");
    out << "</svg>\n";
    write_file(path, out.str());
}

void write_bar_chart_svg(const std::string& path, const BarChart& chart) {
    double v_lo = 0.0, v_hi = 0.0;
    for (const auto& b : chart.bars) {
        v_lo = std::min(v_lo, b.value);
        v_hi = std::max(v_hi, b.value);
    }
    if (v_hi == v_lo) v_hi = v_lo + 1.0;
    v_hi *= 1.1;
    if (v_lo < 0.0) v_lo *= 1.1;
    LinearScale ys{v_lo, v_hi, static_cast<double>(kHeight - kBottom), static_cast<double>(kTop)};

    std::ostringstream out;
    open_svg(out, chart.title);
    const auto n = chart.bars.size();
    double span = static_cast<double>(kWidth - kLeft - kRight);
    double slot = span / std::max<size_t>(1, n);
    double bar_w = slot * 0.7;

    out << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << fmt(ys(0.0)) << "\" x2=\""
        << kWidth - kRight << "\" y2=\"" << fmt(ys(0.0)) << "\"/>\n";
    out << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
        << "\" y2=\"" << kHeight - kBottom << "\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double fv = v_lo + (v_hi - v_lo) * i / 5;
        out << "<text class=\"label\" x=\"" << kLeft - 6 << "\" y=\"" << fmt(ys(fv) + 3)
            << "\" text-anchor=\"end\">" << fmt(fv, 3) << "</text>\n";
    }
    for (size_t i = 0; i < n; ++i) {
        const auto& b = chart.bars[i];
        double x = kLeft + slot * (static_cast<double>(i) + 0.15);
        double y0 = ys(std::max(0.0, b.value));
        double h = std::fabs(ys(b.value) - ys(0.0));
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(bar_w)
            << "\" height=\"" << fmt(h) << "\" fill=\"" << b.color << "\"/>\n";
        out << "<text class=\"label\" x=\"" << fmt(x + bar_w / 2) << "\" y=\""
            << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << escape_xml(b.label)
            << "</text>\n";
    }
    out << "<text class=\"label\" x=\"14\" y=\"" << (kTop + kHeight - kBottom) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << (kTop + kHeight - kBottom) / 2 << ")\">" << escape_xml(chart.y_label) << "</text>\n";
    out << "</svg>\n";
    write_file(path, out.str());
}

} // namespace phenoflow
