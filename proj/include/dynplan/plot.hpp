#pragma once
// Trajectory CSV reading and static SVG line plots.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dynplan {

struct Table {
    std::string header_comment;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // column-major

    int column(const std::string& n) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == n) return static_cast<int>(i);
        return -1;
    }
    std::string listing() const {
        std::string s;
        for (const auto& c : columns) s += (s.empty() ? "" : ", ") + c;
        return s;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

// Reads a trajectory CSV; the first line must carry the expected schema tag.
inline Table read_table(const std::string& path, const std::string& schema) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    if (line.rfind("# " + schema, 0) != 0) throw ConfigError(path + ": expected schema '" + schema + "', found '" + line + "'");
    t.header_comment = line;
    if (!std::getline(in, line) || line.empty()) throw ConfigError(path + ": missing header row");
    t.columns = split_csv_line(line);
    t.data.assign(t.columns.size(), {});
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.columns.size())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) + " cells");
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                t.data[c].push_back(std::stod(cells[c]));
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": '" + cells[c] + "' is not a number");
            }
        }
    }
    if (t.data.empty() || t.data[0].empty()) throw ConfigError(path + ": no data rows");
    return t;
}

struct Series {
    std::string name;
    std::vector<double> y;
    bool dashed = false;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

inline std::string coord(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

} // namespace detail

inline std::string line_plot_svg(const std::string& title, const std::string& xlabel, const std::vector<double>& x,
                                 const std::vector<Series>& series) {
    require(!x.empty() && !series.empty(), "nothing to plot");
    const double W = 760, H = 380, ml = 70, mr = 170, mt = 40, mb = 50;
    const double pw = W - ml - mr, ph = H - mt - mb;
    double x0 = x.front(), x1 = x.back();
    if (x1 <= x0) x1 = x0 + 1.0;
    double y0 = series[0].y[0], y1 = y0;
    for (const auto& s : series)
        for (double v : s.y) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    if (y1 - y0 < 1e-12) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return mt + (1.0 - (v - y0) / (y1 - y0)) * ph; };
    static const char* palette[] = {"#1f5fa8", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#17a2b8", "#5d6d7e", "#b03a7a"};

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::coord(W) + "\" height=\"" + detail::coord(H) + "\" viewBox=\"0 0 " +
         detail::coord(W) + " " + detail::coord(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::coord(ml) + "\" y=\"24\" font-size=\"15\">" + detail::escape(title) + "</text>\n";
    o += "<rect x=\"" + detail::coord(ml) + "\" y=\"" + detail::coord(mt) + "\" width=\"" + detail::coord(pw) + "\" height=\"" +
         detail::coord(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        o += "<line x1=\"" + detail::coord(px(xv)) + "\" y1=\"" + detail::coord(mt + ph) + "\" x2=\"" + detail::coord(px(xv)) +
             "\" y2=\"" + detail::coord(mt) + "\" stroke=\"#ddd\"/>\n";
        o += "<text x=\"" + detail::coord(px(xv)) + "\" y=\"" + detail::coord(mt + ph + 16) + "\" text-anchor=\"middle\">" +
             detail::num(xv) + "</text>\n";
        o += "<line x1=\"" + detail::coord(ml) + "\" y1=\"" + detail::coord(py(yv)) + "\" x2=\"" + detail::coord(ml + pw) + "\" y2=\"" +
             detail::coord(py(yv)) + "\" stroke=\"#ddd\"/>\n";
        o += "<text x=\"" + detail::coord(ml - 6) + "\" y=\"" + detail::coord(py(yv) + 4) + "\" text-anchor=\"end\">" +
             detail::num(yv) + "</text>\n";
    }
    o += "<text x=\"" + detail::coord(ml + pw / 2) + "\" y=\"" + detail::coord(H - 10) + "\" text-anchor=\"middle\">" +
         detail::escape(xlabel) + "</text>\n";
    const std::size_t n = x.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 1500);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* col = palette[s % 8];
        o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\"";
        if (series[s].dashed) o += " stroke-dasharray=\"5,3\"";
        o += " points=\"";
        for (std::size_t i = 0; i < n; i += stride) o += detail::coord(px(x[i])) + "," + detail::coord(py(series[s].y[i])) + " ";
        o += detail::coord(px(x[n - 1])) + "," + detail::coord(py(series[s].y[n - 1]));
        o += "\"/>\n";
        const double ly = mt + 14 + 18.0 * static_cast<double>(s);
        o += "<line x1=\"" + detail::coord(ml + pw + 12) + "\" y1=\"" + detail::coord(ly - 4) + "\" x2=\"" + detail::coord(ml + pw + 36) +
             "\" y2=\"" + detail::coord(ly - 4) + "\" stroke=\"" + col + "\" stroke-width=\"2\"" +
             (series[s].dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
        o += "<text x=\"" + detail::coord(ml + pw + 42) + "\" y=\"" + detail::coord(ly) + "\">" + detail::escape(series[s].name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

// Plot of named columns; `causes` adds a dashed sum overlay (should sit at 1).
inline std::string table_plot_svg(const Table& t, const std::string& title, const std::vector<std::string>& cols, bool sum_overlay) {
    const int xc = t.column("t") >= 0 ? t.column("t") : 0;
    std::vector<Series> series;
    for (const auto& c : cols) {
        int k = t.column(c);
        if (k < 0) throw ConfigError("unknown column '" + c + "'; available: " + t.listing());
        series.push_back({c, t.data[k], false});
    }
    if (sum_overlay && !series.empty()) {
        Series sum{"sum", std::vector<double>(series[0].y.size(), 0.0), true};
        for (const auto& s : series)
            for (std::size_t i = 0; i < s.y.size(); ++i) sum.y[i] += s.y[i];
        series.push_back(sum);
    }
    return line_plot_svg(title, t.columns[xc], t.data[xc], series);
}

} // namespace dynplan
