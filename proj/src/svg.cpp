#include "datadiet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace datadiet::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 60;
constexpr std::size_t kMaxPathPoints = 1000;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" + extra + ">" + escape(s) + "</text>\n";
}

struct Frame {
    double x_min, x_max, y_min, y_max;

    double px(double x) const {
        const double span = x_max - x_min;
        return kLeft + (span > 0 ? (x - x_min) / span : 0.5) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        const double span = y_max - y_min;
        return kHeight - kBottom - (span > 0 ? (y - y_min) / span : 0.5) * (kHeight - kTop - kBottom);
    }
};

std::string axes(const Frame& f, const std::string& title, const std::string& x_label, const std::string& y_label) {
    std::string out;
    out += text(kWidth / 2 - 80, 22, title, " font-size=\"14\" font-weight=\"bold\"");
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kHeight - kBottom) + "\" x2=\"" + num(kWidth - kRight) +
           "\" y2=\"" + num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
           num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x_min + (f.x_max - f.x_min) * i / 4.0;
        const double yv = f.y_min + (f.y_max - f.y_min) * i / 4.0;
        out += text(f.px(xv) - 10, kHeight - kBottom + 16, tick(xv));
        out += text(kLeft - 45, f.py(yv) + 4, tick(yv));
    }
    out += text(kLeft + (kWidth - kLeft - kRight) / 2 - 40, kHeight - 15, x_label);
    out += text(14, kTop + (kHeight - kTop - kBottom) / 2, y_label,
                " transform=\"rotate(-90 14 " + num(kTop + (kHeight - kTop - kBottom) / 2) + ")\"");
    return out;
}

} // namespace

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

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
    Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Series& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            f.x_min = std::min(f.x_min, s.x[i]);
            f.x_max = std::max(f.x_max, s.x[i]);
            f.y_min = std::min(f.y_min, s.y[i]);
            f.y_max = std::max(f.y_max, s.y[i]);
        }
    }
    if (!std::isfinite(f.x_min)) f = {0, 1, 0, 1};

    std::string out = header(kWidth, kHeight);
    out += axes(f, title, x_label, y_label);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        const std::size_t stride = std::max<std::size_t>(1, n / kMaxPathPoints);
        std::string d;
        for (std::size_t i = 0; i < n; i += stride) {
            d += (d.empty() ? "M" : " L") + num(f.px(s.x[i])) + " " + num(f.py(s.y[i]));
        }
        if (n > 0 && (n - 1) % stride != 0) d += " L" + num(f.px(s.x[n - 1])) + " " + num(f.py(s.y[n - 1]));
        if (!d.empty()) {
            out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        }
        if (n <= 20) {
            for (std::size_t i = 0; i < n; ++i) {
                out += "<circle cx=\"" + num(f.px(s.x[i])) + "\" cy=\"" + num(f.py(s.y[i])) + "\" r=\"3\" fill=\"" +
                       color + "\"/>\n";
            }
        }
        const double ly = kTop + 18.0 * static_cast<double>(k);
        out += "<rect x=\"" + num(kWidth - kRight + 12) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"3\" fill=\"" +
               color + "\"/>\n";
        out += text(kWidth - kRight + 30, ly - 4, s.name);
    }
    out += "</svg>\n";
    return out;
}

std::string heatmap(const std::string& title, const std::vector<std::string>& labels,
                    const std::vector<std::vector<std::optional<double>>>& values) {
    const double cell = 60;
    const double left = 110;
    const double top = 50;
    const double n = static_cast<double>(labels.size());
    std::string out = header(left + cell * n + 20, top + cell * n + 100);
    out += text(10, 22, title, " font-size=\"14\" font-weight=\"bold\"");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = top + cell * static_cast<double>(i);
        out += text(5, y + cell / 2 + 4, labels[i]);
        for (std::size_t j = 0; j < labels.size(); ++j) {
            const double x = left + cell * static_cast<double>(j);
            std::string fill = "#cccccc";
            std::string label = "n/a";
            if (values[i][j]) {
                // Blue for -1 through white at 0 to red for +1.
                const double v = std::clamp(*values[i][j], -1.0, 1.0);
                const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
                char buf[16];
                if (v >= 0) {
                    std::snprintf(buf, sizeof(buf), "#ff%02x%02x", fade, fade);
                } else {
                    std::snprintf(buf, sizeof(buf), "#%02x%02xff", fade, fade);
                }
                fill = buf;
                label = num(*values[i][j]);
            }
            out += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
                   "\" fill=\"" + fill + "\" stroke=\"white\"/>\n";
            out += text(x + cell / 2 - 14, y + cell / 2 + 4, label);
        }
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const double x = left + cell * static_cast<double>(j) + cell / 2;
        const double y = top + cell * n + 12;
        out += text(x, y, labels[j], " transform=\"rotate(40 " + num(x) + " " + num(y) + ")\"");
    }
    out += "</svg>\n";
    return out;
}

std::string histogram(const std::string& title, const std::string& x_label, const std::vector<double>& edges,
                      const std::vector<std::size_t>& counts) {
    Frame f{0, 1, 0, 1};
    if (!counts.empty() && edges.size() == counts.size() + 1) {
        f.x_min = edges.front();
        f.x_max = edges.back();
        f.y_max = static_cast<double>(std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end())));
    }
    std::string out = header(kWidth, kHeight);
    out += axes(f, title, x_label, "count");
    if (counts.empty()) out += text(kWidth / 2 - 40, kHeight / 2, "no data");
    for (std::size_t b = 0; b < counts.size() && b + 1 < edges.size(); ++b) {
        const double x0 = f.px(edges[b]);
        const double x1 = f.px(edges[b + 1]);
        const double y = f.py(static_cast<double>(counts[b]));
        out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y) + "\" width=\"" + num(std::max(0.0, x1 - x0 - 1)) +
               "\" height=\"" + num(f.py(0) - y) + "\" fill=\"#1f77b4\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace datadiet::svg
