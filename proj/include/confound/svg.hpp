#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "confound/csv.hpp"
#include "confound/errors.hpp"

namespace confound {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Static SVG line chart: one polyline per series, linear axes with simple
// tick labels and a legend.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<SvgSeries>& series) {
    const double width = 640, height = 420;
    const double ml = 70, mr = 150, mt = 40, mb = 50;
    static const char* palette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#8f2d56",
                                    "#edae49", "#00798c", "#6f5060", "#30323d",
                                    "#a44a3f", "#5b8c5a"};

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymin < ymax)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double xv = xmin + t * (xmax - xmin) / 4.0;
        double yv = ymin + t * (ymax - ymin) / 4.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\">" << format_number(std::round(xv * 1000) / 1000) << "</text>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\">" << format_number(std::round(yv * 1000) / 1000) << "</text>\n";
    }
    out << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + (height - mt - mb) / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (mt + (height - mt - mb) / 2)
        << ")\">" << y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % 10];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            out << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
        out << "\"/>\n";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            out << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\"" << py(series[s].y[i])
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        double ly = mt + 14.0 * static_cast<double>(s);
        out << "<rect x=\"" << width - mr + 10 << "\" y=\"" << ly - 8
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << width - mr + 26 << "\" y=\"" << ly << "\">" << series[s].label
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("write_text_file: cannot open " + path);
    out << content;
}

} // namespace confound
