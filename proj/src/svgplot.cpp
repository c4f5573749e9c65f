#include "rsub/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rsub/common.hpp"
#include "rsub/errors.hpp"

namespace rsub {

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw MissingColumn("plot: no column named " + name);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("plot: cannot open " + path);
  Table t;
  std::string line;
  if (std::getline(in, line)) t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row = split(line);
    if (row.size() == t.header.size()) t.rows.push_back(std::move(row));
  }
  return t;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 610, kTop = 30, kBottom = 430;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x
  bool dashed = false;
};

}  // namespace

void render_plot(const PlotSpec& spec) {
  const Table table = read_table(spec.input_csv);
  int xi = -1, yi = -1;
  std::vector<int> gi;
  int status_col = -1;
  if (!table.header.empty()) {
    xi = table.column(spec.x_col);
    yi = table.column(spec.y_col);
    for (const std::string& g : spec.group_by) gi.push_back(table.column(g));
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (table.header[i] == "status") status_col = static_cast<int>(i);
  }

  // group key -> x -> ys
  std::map<std::string, std::map<double, std::vector<double>>> grouped;
  std::map<std::string, std::map<double, std::vector<double>>> ref_comp_data;
  std::map<std::string, std::map<double, std::vector<double>>> ref_lower_data;
  int comp_col = -1, lower_col = -1;
  if (spec.ref_comp && !table.header.empty())
    comp_col = table.column("predicted_bound_proj");
  if (spec.ref_lower && !table.header.empty())
    lower_col = table.column("predicted_bound_lower");

  for (const auto& row : table.rows) {
    if (status_col >= 0 && row[status_col] != "ok") continue;
    double x, y;
    try {
      x = std::stod(row[xi]);
      y = std::stod(row[yi]);
    } catch (...) {
      continue;
    }
    std::string key;
    for (int g : gi) key += (key.empty() ? "" : ", ") + table.header[g] + "=" + row[g];
    grouped[key][x].push_back(y);
    if (comp_col >= 0) ref_comp_data[key][x].push_back(std::stod(row[comp_col]));
    if (lower_col >= 0)
      ref_lower_data[key][x].push_back(std::stod(row[lower_col]));
  }

  std::vector<Series> series;
  const auto aggregate = [&](const std::map<double, std::vector<double>>& m,
                             const std::string& label, bool dashed) {
    Series s;
    s.label = label;
    s.dashed = dashed;
    for (const auto& [x, ys] : m) {
      const double y = median_of(ys);
      if (spec.logx && !(x > 0.0)) continue;
      if (spec.logy && !(y > 0.0)) continue;
      s.points.emplace_back(x, y);
    }
    if (!s.points.empty()) series.push_back(std::move(s));
  };
  for (const auto& [key, m] : grouped)
    aggregate(m, key.empty() ? spec.y_col : key, false);
  for (const auto& [key, m] : ref_comp_data)
    aggregate(m, (key.empty() ? std::string() : key + " ") + "upper-ref", true);
  for (const auto& [key, m] : ref_lower_data)
    aggregate(m, (key.empty() ? std::string() : key + " ") + "lower-ref", true);

  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (const Series& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  const bool have_data = xmin <= xmax;
  if (!have_data) {
    xmin = spec.logx ? 1.0 : 0.0;
    xmax = spec.logx ? 10.0 : 1.0;
    ymin = spec.logy ? 1.0 : 0.0;
    ymax = spec.logy ? 10.0 : 1.0;
  }
  const auto pad = [](double& lo, double& hi, bool logscale) {
    if (logscale) {
      lo /= 1.2;
      hi *= 1.2;
    } else {
      const double span = hi - lo;
      const double d = span > 0.0 ? 0.05 * span : std::max(1.0, std::abs(hi));
      lo -= d;
      hi += d;
    }
  };
  pad(xmin, xmax, spec.logx);
  pad(ymin, ymax, spec.logy);

  const auto sx = [&](double x) {
    const double t = spec.logx
                         ? (std::log(x) - std::log(xmin)) /
                               (std::log(xmax) - std::log(xmin))
                         : (x - xmin) / (xmax - xmin);
    return kLeft + t * (kRight - kLeft);
  };
  const auto sy = [&](double y) {
    const double t = spec.logy
                         ? (std::log(y) - std::log(ymin)) /
                               (std::log(ymax) - std::log(ymin))
                         : (y - ymin) / (ymax - ymin);
    return kBottom - t * (kBottom - kTop);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth
      << ' ' << kHeight << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double fx =
        spec.logx ? xmin * std::pow(xmax / xmin, t / 4.0)
                  : xmin + (xmax - xmin) * t / 4.0;
    const double px = sx(fx);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << kBottom << "\" x2=\""
        << fmt(px) << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << kBottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(fx)
        << "</text>\n";
    const double fy =
        spec.logy ? ymin * std::pow(ymax / ymin, t / 4.0)
                  : ymin + (ymax - ymin) * t / 4.0;
    const double py = sy(fy);
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt(py) << "\" x2=\""
        << kLeft << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(py + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(fy)
        << "</text>\n";
  }
  svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 36
      << "\" font-size=\"13\" text-anchor=\"middle\">" << spec.x_col
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (kTop + kBottom) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kTop + kBottom) / 2 << ")\">" << spec.y_col << "</text>\n";

  int color_idx = 0;
  double legend_y = kTop + 8;
  for (const Series& s : series) {
    const char* color = kPalette[color_idx % 8];
    ++color_idx;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (const auto& [x, y] : s.points)
      svg << fmt(sx(x)) << ',' << fmt(sy(y)) << ' ';
    svg << "\"/>\n";
    if (!s.dashed)
      for (const auto& [x, y] : s.points)
        svg << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";

    std::string label = s.label;
    if (spec.logx && spec.logy && s.points.size() >= 2 && !s.dashed) {
      double sxs = 0, sys = 0, sxx = 0, sxy = 0;
      for (const auto& [x, y] : s.points) {
        const double lx = std::log(x), ly = std::log(y);
        sxs += lx;
        sys += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      const double k = static_cast<double>(s.points.size());
      const double slope = (k * sxy - sxs * sys) / (k * sxx - sxs * sxs);
      label += " (slope " + fmt(slope) + ")";
    }
    svg << "<text x=\"" << kRight - 4 << "\" y=\"" << fmt(legend_y)
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">"
        << label << "</text>\n";
    legend_y += 14;
  }
  svg << "</svg>\n";

  std::ofstream out(spec.output_svg, std::ios::trunc);
  if (!out) throw IoError("plot: cannot write " + spec.output_svg);
  out << svg.str();
}

}  // namespace rsub
