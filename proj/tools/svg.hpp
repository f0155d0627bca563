#ifndef WDKG_TOOLS_SVG_HPP
#define WDKG_TOOLS_SVG_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "wdkg/io.hpp"

// Minimal static SVG emitters for the batch reports. Output is plain text
// built from deterministic number formatting, so re-runs are byte-identical.
namespace wdkg::svg {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> values; // x = index
};

inline std::string fmt(double x) { return io::format_double(x); }

inline std::string line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<Series>& series) {
    const double w = 720, h = 420, ml = 70, mr = 20, mt = 50, mb = 50;
    double lo = 0.0, hi = 1e-12;
    std::size_t n = 1;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double span = hi - lo;
    auto px = [&](std::size_t i) {
        return ml + (w - ml - mr) * (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5);
    };
    auto py = [&](double v) { return h - mb - (h - mt - mb) * (v - lo) / span; };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
                      "\" height=\"" + fmt(h) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           title + "</text>\n";
    out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(h - mb) + "\" x2=\"" + fmt(w - mr) +
           "\" y2=\"" + fmt(h - mb) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) + "\" y2=\"" +
           fmt(h - mb) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + span * tick / 4.0;
        out += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(py(v) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(v) + "</text>\n";
    }
    out += "<text x=\"" + fmt((w + ml) / 2) + "\" y=\"" + fmt(h - 12) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
    double legend_y = mt;
    for (const auto& s : series) {
        if (s.values.empty()) continue;
        std::string pts;
        for (std::size_t i = 0; i < s.values.size(); ++i)
            pts += fmt(px(i)) + "," + fmt(py(s.values[i])) + " ";
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"2\" points=\"" +
               pts + "\"/>\n";
        out += "<text x=\"" + fmt(w - mr - 4) + "\" y=\"" + fmt(legend_y) +
               "\" text-anchor=\"end\" font-size=\"12\" fill=\"" + s.color + "\">" + s.label +
               "</text>\n";
        legend_y += 16;
    }
    out += "</svg>\n";
    return out;
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
    const double w = std::max(720.0, 10.0 * static_cast<double>(values.size()) + 110.0);
    const double h = 420, ml = 70, mr = 20, mt = 50, mb = 90;
    double hi = 1e-12;
    for (double v : values) hi = std::max(hi, v);
    const double bw = (w - ml - mr) / std::max<std::size_t>(values.size(), 1);
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
                      "\" height=\"" + fmt(h) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           title + "</text>\n";
    out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(h - mb) + "\" x2=\"" + fmt(w - mr) +
           "\" y2=\"" + fmt(h - mb) + "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = hi * tick / 4.0;
        const double y = h - mb - (h - mt - mb) * v / hi;
        out += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(v) + "</text>\n";
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double bh = (h - mt - mb) * values[i] / hi;
        const double x = ml + bw * static_cast<double>(i);
        out += "<rect x=\"" + fmt(x + 1) + "\" y=\"" + fmt(h - mb - bh) + "\" width=\"" +
               fmt(std::max(bw - 2.0, 1.0)) + "\" height=\"" + fmt(bh) + "\" fill=\"#4878a8\"/>\n";
        if (values.size() <= 40 && i < labels.size())
            out += "<text x=\"" + fmt(x + bw / 2) + "\" y=\"" + fmt(h - mb + 10) +
                   "\" font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-45 " +
                   fmt(x + bw / 2) + " " + fmt(h - mb + 10) + ")\">" + labels[i] + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace wdkg::svg

#endif
