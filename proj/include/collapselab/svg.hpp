#pragma once

#include <string>
#include <vector>

namespace collapselab {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Markers only, no connecting line.
  bool markers = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Minimal fixed-style SVG line/marker plot. Non-finite points (and
/// non-positive ones under log_y) are skipped.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace collapselab
