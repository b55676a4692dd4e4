#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sica/output.hpp"

namespace sica {

/// One named line for the plot; ys must match the shared time grid.
struct SvgSeries {
    std::string label;
    std::vector<double> ys;
    std::string color = "#1f77b4";
};

/// A shaded band (e.g. a 95% envelope) between two curves on the same grid.
struct SvgBand {
    std::string label;
    std::vector<double> lo;
    std::vector<double> hi;
    std::string color = "#1f77b4";
};

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v) {
    // collapse -0 so tick labels are stable
    if (v == 0) v = 0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// largest {1,2,5}*10^k step giving at most `target` intervals
inline double nice_tick_step(double range, int target) {
    const double raw = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 5.0, 10.0})
        if (mult * mag >= raw) return mult * mag;
    return 10.0 * mag;
}

}  // namespace detail

/**
 * Self-contained deterministic SVG line plot on linear axes: optional shaded
 * bands underneath the lines, one legend entry per series and band.
 * Identical inputs produce identical bytes.
 */
inline void emit_svg_plot(const std::vector<double>& times, const std::vector<SvgSeries>& series,
                          const std::vector<SvgBand>& bands, const std::string& title,
                          const std::string& y_label, const std::string& path) {
    if (series.empty()) throw std::domain_error("emit_svg_plot: need at least one series");
    if (times.size() < 2) throw std::domain_error("emit_svg_plot: need at least two time points");
    for (const auto& s : series)
        if (s.ys.size() != times.size())
            throw std::domain_error("emit_svg_plot: series '" + s.label +
                                    "' does not match the time grid");
    for (const auto& b : bands)
        if (b.lo.size() != times.size() || b.hi.size() != times.size())
            throw std::domain_error("emit_svg_plot: band '" + b.label +
                                    "' does not match the time grid");

    const double x_min = times.front();
    const double x_max = times.back();
    double y_min = series[0].ys[0], y_max = series[0].ys[0];
    auto fold = [&](double v) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    };
    for (const auto& s : series)
        for (double v : s.ys) fold(v);
    for (const auto& b : bands) {
        for (double v : b.lo) fold(v);
        for (double v : b.hi) fold(v);
    }
    if (y_max == y_min) {
        y_min -= 1.0;
        y_max += 1.0;
    } else {
        const double pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;
    }

    constexpr double width = 900, height = 460;
    constexpr double ml = 72, mr = 24, mt = 44, mb = 52;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto sx = [&](double t) { return ml + (t - x_min) / (x_max - x_min) * pw; };
    auto sy = [&](double v) { return mt + (y_max - v) / (y_max - y_min) * ph; };

    std::string svg;
    svg.reserve(1 << 16);
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"460\" "
           "viewBox=\"0 0 900 460\">\n";
    svg += "<rect width=\"900\" height=\"460\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"450\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";

    // grid and ticks
    const double xs = detail::nice_tick_step(x_max - x_min, 8);
    const double ys_step = detail::nice_tick_step(y_max - y_min, 6);
    for (double t = std::ceil(x_min / xs) * xs; t <= x_max + 1e-9 * (x_max - x_min); t += xs) {
        const std::string x = detail::fmt2(sx(t));
        svg += "<line x1=\"" + x + "\" y1=\"" + detail::fmt2(mt) + "\" x2=\"" + x + "\" y2=\"" +
               detail::fmt2(mt + ph) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + x + "\" y=\"" + detail::fmt2(mt + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               detail::fmt_tick(t) + "</text>\n";
    }
    for (double v = std::ceil(y_min / ys_step) * ys_step; v <= y_max + 1e-9 * (y_max - y_min);
         v += ys_step) {
        const std::string y = detail::fmt2(sy(v));
        svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + y + "\" x2=\"" +
               detail::fmt2(ml + pw) + "\" y2=\"" + y +
               "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + detail::fmt2(ml - 6) + "\" y=\"" + detail::fmt2(sy(v) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               detail::fmt_tick(v) + "</text>\n";
    }

    // bands under the lines
    for (const auto& b : bands) {
        std::string d = "M";
        for (std::size_t j = 0; j < times.size(); ++j)
            d += (j ? " L" : "") + detail::fmt2(sx(times[j])) + " " + detail::fmt2(sy(b.hi[j]));
        for (std::size_t j = times.size(); j-- > 0;)
            d += " L" + detail::fmt2(sx(times[j])) + " " + detail::fmt2(sy(b.lo[j]));
        d += " Z";
        svg += "<path d=\"" + d + "\" fill=\"" + b.color + "\" fill-opacity=\"0.2\" "
               "stroke=\"none\"/>\n";
    }

    for (const auto& s : series) {
        std::string pts;
        for (std::size_t j = 0; j < times.size(); ++j) {
            if (j) pts += ' ';
            pts += detail::fmt2(sx(times[j])) + "," + detail::fmt2(sy(s.ys[j]));
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"1.5\"/>\n";
    }

    // axes
    svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt + ph) + "\" x2=\"" +
           detail::fmt2(ml + pw) + "\" y2=\"" + detail::fmt2(mt + ph) +
           "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt) + "\" x2=\"" +
           detail::fmt2(ml) + "\" y2=\"" + detail::fmt2(mt + ph) +
           "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + detail::fmt2(ml + pw / 2) + "\" y=\"" + detail::fmt2(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::fmt2(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " + detail::fmt2(mt + ph / 2) + ")\">" + y_label +
           "</text>\n";

    // legend, top right of the plot area
    double ly = mt + 14;
    auto legend_entry = [&](const std::string& color, const std::string& label, bool band) {
        const double lx = ml + pw - 150;
        if (band)
            svg += "<rect x=\"" + detail::fmt2(lx) + "\" y=\"" + detail::fmt2(ly - 7) +
                   "\" width=\"22\" height=\"10\" fill=\"" + color + "\" fill-opacity=\"0.2\"/>\n";
        else
            svg += "<line x1=\"" + detail::fmt2(lx) + "\" y1=\"" + detail::fmt2(ly - 3) +
                   "\" x2=\"" + detail::fmt2(lx + 22) + "\" y2=\"" + detail::fmt2(ly - 3) +
                   "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        svg += "<text x=\"" + detail::fmt2(lx + 28) + "\" y=\"" + detail::fmt2(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + label + "</text>\n";
        ly += 16;
    };
    for (const auto& s : series) legend_entry(s.color, s.label, false);
    for (const auto& b : bands) legend_entry(b.color, b.label, true);

    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << svg;
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace sica
