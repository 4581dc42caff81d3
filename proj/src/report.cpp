#include "gmfc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gmfc/errors.hpp"
#include "gmfc/textio.hpp"

namespace gmfc {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    default: return "inconclusive";
  }
}

void ExperimentReport::param(const std::string& key, const std::string& value) {
  parameters.emplace_back(key, value);
}
void ExperimentReport::param(const std::string& key, const char* value) {
  parameters.emplace_back(key, std::string(value));
}
void ExperimentReport::param(const std::string& key, double value) {
  parameters.emplace_back(key, fmt_g(value));
}
void ExperimentReport::param(const std::string& key, long long value) {
  parameters.emplace_back(key, fmt_int(value));
}
void ExperimentReport::param(const std::string& key, int value) {
  parameters.emplace_back(key, fmt_int(value));
}
void ExperimentReport::param(const std::string& key, unsigned long long value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu", value);
  parameters.emplace_back(key, std::string(buf));
}

static std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadSpec("cannot open " + path + " for writing");
  return out;
}

void write_experiment_outputs(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream out = open_out(dir + "/report.csv");
    out << join(report.columns, ",") << "\n";
    for (const auto& row : report.rows) out << join(row, ",") << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/config_resolved.ini");
    out << "[experiment]\n";
    out << "id = " << report.experiment_id << "\n";
    for (const auto& [k, v] : report.parameters) out << k << " = " << v << "\n";
  }
  {
    std::ofstream out = open_out(dir + "/verdict.txt");
    out << "verdict=" << verdict_name(report.verdict) << "\n";
    out << "tolerance_stderr=" << fmt_g(report.tol_stderr) << "\n";
    for (const auto& n : report.notes) out << "note: " << n << "\n";
  }
  for (const ReportPlot& p : report.plots) write_plot_svg(p, dir + "/" + p.file);
}

// ------------------------------------------------------------------- svg

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kL = 70, kR = 24, kT = 44, kB = 54;

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#3a7d44", "#8a5a83", "#c98a2b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return std::string(buf);
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return std::string(buf);
}

struct Scale {
  double lo = 0, hi = 1;
  double p0 = 0, p1 = 1;  // pixel range
  double operator()(double v) const {
    return p0 + (v - lo) / (hi - lo) * (p1 - p0);
  }
};

Scale make_scale(double lo, double hi, double p0, double p1) {
  if (!(hi > lo)) {
    double pad = std::fabs(lo) > 0 ? std::fabs(lo) * 0.5 : 1.0;
    lo -= pad;
    hi += pad;
  }
  return Scale{lo, hi, p0, p1};
}

void text(std::ofstream& o, double x, double y, const std::string& s,
          const std::string& anchor, int size) {
  o << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
    << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
    << "</text>\n";
}

void frame(std::ofstream& o, const ReportPlot& plot) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  o << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  text(o, kW / 2.0, 24, plot.title, "middle", 15);
  text(o, kW / 2.0, kH - 10, plot.xlabel, "middle", 12);
  o << "<text x=\"16\" y=\"" << num((kH - kT - kB) / 2.0 + kT)
    << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 16 "
    << num((kH - kT - kB) / 2.0 + kT) << ")\">" << plot.ylabel << "</text>\n";
  o << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << (kW - kL - kR)
    << "\" height=\"" << (kH - kT - kB)
    << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
}

void y_ticks(std::ofstream& o, const Scale& sy) {
  for (int k = 0; k <= 4; ++k) {
    double v = sy.lo + (sy.hi - sy.lo) * k / 4.0;
    double y = sy(v);
    o << "<line x1=\"" << (kL - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << kL
      << "\" y2=\"" << num(y) << "\" stroke=\"#444\"/>\n";
    text(o, kL - 8, y + 4, tick(v), "end", 11);
  }
}

}  // namespace

void write_plot_svg(const ReportPlot& plot, const std::string& path) {
  std::ofstream o = open_out(path);

  if (plot.bars) {
    const std::vector<double>& vals =
        plot.series.empty() ? std::vector<double>() : plot.series[0].ys;
    double lo = 0, hi = 0;
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    Scale sy = make_scale(lo, hi, kH - kB, kT);
    frame(o, plot);
    y_ticks(o, sy);
    int nb = (int)vals.size();
    double span = (double)(kW - kL - kR);
    for (int i = 0; i < nb; ++i) {
      double bw = span / nb * 0.6;
      double cx = kL + span * (i + 0.5) / nb;
      double y0 = sy(0.0), y1 = sy(vals[i]);
      o << "<rect x=\"" << num(cx - bw / 2) << "\" y=\"" << num(std::min(y0, y1))
        << "\" width=\"" << num(bw) << "\" height=\"" << num(std::fabs(y1 - y0))
        << "\" fill=\"" << kPalette[i % 5] << "\"/>\n";
      if (i < (int)plot.bar_labels.size())
        text(o, cx, kH - kB + 16, plot.bar_labels[i], "middle", 11);
      text(o, cx, std::min(y0, y1) - 4, tick(vals[i]), "middle", 10);
    }
    o << "</svg>\n";
    return;
  }

  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const PlotSeries& s : plot.series)
    for (size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xlo = xhi = s.xs[i];
        ylo = yhi = s.ys[i];
        first = false;
      }
      xlo = std::min(xlo, s.xs[i]);
      xhi = std::max(xhi, s.xs[i]);
      ylo = std::min(ylo, s.ys[i]);
      yhi = std::max(yhi, s.ys[i]);
    }
  Scale sx = make_scale(xlo, xhi, kL, kW - kR);
  Scale sy = make_scale(ylo, yhi, kH - kB, kT);
  frame(o, plot);
  y_ticks(o, sy);
  for (int k = 0; k <= 4; ++k) {
    double v = sx.lo + (sx.hi - sx.lo) * k / 4.0;
    double x = sx(v);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << (kH - kB) << "\" x2=\"" << num(x)
      << "\" y2=\"" << (kH - kB + 4) << "\" stroke=\"#444\"/>\n";
    text(o, x, kH - kB + 18, tick(v), "middle", 11);
  }
  for (size_t si = 0; si < plot.series.size(); ++si) {
    const PlotSeries& s = plot.series[si];
    const char* color = kPalette[si % 5];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.xs.size(); ++i) {
      if (i) o << ' ';
      o << num(sx(s.xs[i])) << ',' << num(sy(s.ys[i]));
    }
    o << "\"/>\n";
    for (size_t i = 0; i < s.xs.size(); ++i)
      o << "<circle cx=\"" << num(sx(s.xs[i])) << "\" cy=\"" << num(sy(s.ys[i]))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    text(o, kW - kR - 6, kT + 16 + 14 * (double)si, s.name, "end", 11);
    o << "<line x1=\"" << (kW - kR - 100) << "\" y1=\"" << num(kT + 12 + 14 * (double)si)
      << "\" x2=\"" << (kW - kR - 80) << "\" y2=\"" << num(kT + 12 + 14 * (double)si)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }
  o << "</svg>\n";
}

}  // namespace gmfc
