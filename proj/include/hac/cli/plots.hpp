#pragma once

#include <fstream>
#include <iomanip>
#include <map>

#include "hac/core/tensor.hpp"

namespace hac {

// Static SVG charts with a fixed style and no timestamps, so identical inputs
// produce byte-identical files.
namespace svg {

inline std::string num(real v, int digits = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline const char* kPalette[8] = {"#4878cf", "#d65f5f", "#59a14f", "#e8a13a",
                                  "#8064a2", "#5fbcd3", "#b07aa1", "#9c755f"};

struct Canvas {
    std::ostringstream body;
    long width, height;

    Canvas(long w, long h) : width(w), height(h) {}

    void rect(real x, real y, real w, real h, const std::string& fill) {
        body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
             << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }
    void line(real x1, real y1, real x2, real y2, const std::string& stroke,
              real stroke_width = 1.0) {
        body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
             << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
             << num(stroke_width) << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<real, real>>& pts, const std::string& stroke) {
        body << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) body << num(x) << "," << num(y) << " ";
        body << "\"/>\n";
    }
    void text(real x, real y, const std::string& s, int size = 12,
              const std::string& anchor = "start") {
        body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
             << "</text>\n";
    }

    void save(const std::string& path) {
        std::ofstream out(path);
        check(out.good(), "cannot open for writing: " + path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
            << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
        out.close();
        check(out.good(), "write failed: " + path);
    }
};

}  // namespace svg

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    long col(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return (long)i;
        throw Error("csv is missing column '" + name + "'");
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "cannot open csv: " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream is(line);
        std::string cell;
        while (std::getline(is, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = cells;
            first = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    check(!t.header.empty(), "csv has no header: " + path);
    check(!t.rows.empty(), "no rows in csv: " + path);
    return t;
}

// Grouped bar chart: one group per `group_col` value, one colored bar per
// `series_col` value inside it.
inline void plot_grouped_bars(const CsvTable& t, const std::string& group_col,
                              const std::string& series_col, const std::string& value_col,
                              const std::string& title, const std::string& path) {
    const long gc = t.col(group_col), sc = t.col(series_col), vc = t.col(value_col);
    std::vector<std::string> groups, series;
    for (const auto& r : t.rows) {
        if (std::find(groups.begin(), groups.end(), r[(size_t)gc]) == groups.end())
            groups.push_back(r[(size_t)gc]);
        if (std::find(series.begin(), series.end(), r[(size_t)sc]) == series.end())
            series.push_back(r[(size_t)sc]);
    }
    real vmax = 0;
    for (const auto& r : t.rows) vmax = std::max(vmax, std::stod(r[(size_t)vc]));
    if (vmax <= 0) vmax = 1.0;

    const long width = std::max<long>(420, 120 + (long)groups.size() * 30 *
                                                     (long)std::max<size_t>(series.size(), 1));
    svg::Canvas c(width, 320);
    const real x0 = 60, y0 = 260, plot_h = 200;
    c.text((real)width / 2, 24, title, 14, "middle");
    c.line(x0, y0, (real)width - 20, y0, "#333");
    c.line(x0, y0, x0, y0 - plot_h, "#333");
    for (int tick = 0; tick <= 4; ++tick) {
        const real v = vmax * tick / 4.0;
        const real y = y0 - plot_h * tick / 4.0;
        c.line(x0 - 4, y, x0, y, "#333");
        c.text(x0 - 8, y + 4, svg::num(v, 3), 10, "end");
    }
    const real group_w = ((real)width - 80 - x0) / (real)groups.size();
    const real bar_w = std::min(24.0, group_w / (real)series.size() * 0.8);
    for (size_t g = 0; g < groups.size(); ++g) {
        const real gx = x0 + group_w * (real)g + group_w / 2;
        c.text(gx, y0 + 16, groups[g], 10, "middle");
        for (size_t s = 0; s < series.size(); ++s) {
            real value = 0;
            bool found = false;
            for (const auto& r : t.rows)
                if (r[(size_t)gc] == groups[g] && r[(size_t)sc] == series[s]) {
                    value = std::stod(r[(size_t)vc]);
                    found = true;
                }
            if (!found) continue;
            const real h = plot_h * value / vmax;
            const real x = gx + bar_w * ((real)s - (real)series.size() / 2.0);
            c.rect(x, y0 - h, bar_w - 2, h, svg::kPalette[s % 8]);
        }
    }
    for (size_t s = 0; s < series.size(); ++s) {
        const real lx = x0 + (real)s * 130;
        c.rect(lx, 290, 10, 10, svg::kPalette[s % 8]);
        c.text(lx + 14, 299, series[s], 10);
    }
    c.save(path);
}

// One polyline per (model, layer) over a numeric x column.
inline void plot_threshold_curves(const CsvTable& t, const std::string& title,
                                  const std::string& path) {
    const long mc = t.col("model"), lc = t.col("layer"), xc = t.col("threshold"),
               yc = t.col("count");
    std::vector<std::string> keys;
    for (const auto& r : t.rows) {
        const std::string key = r[(size_t)mc] + "/" + r[(size_t)lc];
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    real ymax = 1;
    for (const auto& r : t.rows) ymax = std::max(ymax, std::stod(r[(size_t)yc]));
    svg::Canvas c(520, 340);
    const real x0 = 60, y0 = 260, plot_w = 420, plot_h = 200;
    c.text(260, 24, title, 14, "middle");
    c.line(x0, y0, x0 + plot_w, y0, "#333");
    c.line(x0, y0, x0, y0 - plot_h, "#333");
    for (int tick = 0; tick <= 4; ++tick) {
        const real y = y0 - plot_h * tick / 4.0;
        c.text(x0 - 8, y + 4, svg::num(ymax * tick / 4.0, 0), 10, "end");
        c.line(x0 - 4, y, x0, y, "#333");
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const real x = x0 + plot_w * tick / 4.0;
        c.text(x, y0 + 16, svg::num(0.05 + (0.95 - 0.05) * tick / 4.0, 2), 10, "middle");
    }
    for (size_t k = 0; k < keys.size(); ++k) {
        std::vector<std::pair<real, real>> pts;
        for (const auto& r : t.rows) {
            if (r[(size_t)mc] + "/" + r[(size_t)lc] != keys[k]) continue;
            const real tau = std::stod(r[(size_t)xc]);
            const real count = std::stod(r[(size_t)yc]);
            pts.emplace_back(x0 + plot_w * (tau - 0.05) / 0.9, y0 - plot_h * count / ymax);
        }
        c.polyline(pts, svg::kPalette[k % 8]);
        c.rect(x0 + 8, 40 + 14 * (real)k, 10, 10, svg::kPalette[k % 8]);
        c.text(x0 + 22, 49 + 14 * (real)k, keys[k], 10);
    }
    c.save(path);
}

// Plain table rendering (reconstruction metrics).
inline void plot_table(const CsvTable& t, const std::string& title, const std::string& path) {
    const long rows = (long)t.rows.size(), cols = (long)t.header.size();
    const long width = 140 * cols + 40, height = 70 + 24 * (rows + 1);
    svg::Canvas c(width, height);
    c.text((real)width / 2, 24, title, 14, "middle");
    for (long j = 0; j < cols; ++j) c.text(30 + 140.0 * (real)j, 52, t.header[(size_t)j], 12);
    c.line(20, 60, (real)width - 20, 60, "#333");
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j)
            c.text(30 + 140.0 * (real)j, 76 + 24.0 * (real)i, t.rows[(size_t)i][(size_t)j], 11);
    c.save(path);
}

}  // namespace hac
