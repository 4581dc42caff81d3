#pragma once

#include <string>
#include <utility>
#include <vector>

// Experiment reports: result rows preformatted for byte-stable CSV output,
// a verdict computed from declared criteria only, and optional line/bar
// plots rendered as self-contained SVG.

namespace gmfc {

enum class Verdict { Pass, Fail, Inconclusive };
const char* verdict_name(Verdict v);

struct PlotSeries {
  std::string name;
  std::vector<double> xs, ys;
};

struct ReportPlot {
  std::string file;  // written under the experiment output directory
  std::string title, xlabel, ylabel;
  bool bars = false;  // bar chart: series[0].ys with bar_labels
  std::vector<std::string> bar_labels;
  std::vector<PlotSeries> series;
};

struct ExperimentReport {
  std::string experiment_id;
  std::vector<std::pair<std::string, std::string>> parameters;  // resolved, ordered
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  Verdict verdict = Verdict::Inconclusive;
  double tol_stderr = 3.0;  // tolerance basis, in stderr multiples
  std::vector<std::string> notes;
  std::vector<ReportPlot> plots;

  void param(const std::string& key, const std::string& value);
  void param(const std::string& key, const char* value);
  void param(const std::string& key, double value);
  void param(const std::string& key, long long value);
  void param(const std::string& key, int value);
  void param(const std::string& key, unsigned long long value);
};

// Writes report.csv, config_resolved.ini, verdict.txt and every plot under
// dir (created if missing).
void write_experiment_outputs(const ExperimentReport& report, const std::string& dir);

void write_plot_svg(const ReportPlot& plot, const std::string& path);

}  // namespace gmfc
