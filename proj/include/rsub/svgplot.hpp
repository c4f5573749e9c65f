#pragma once

#include <string>
#include <vector>

namespace rsub {

/// Deterministic hand-emitted SVG: fixed viewBox, no timestamps, elements in
/// sorted group order, so outputs diff cleanly in tests.
struct PlotSpec {
  std::string input_csv;
  std::string x_col = "delta";
  std::string y_col = "sin_theta_sq";
  std::vector<std::string> group_by;
  bool logx = false;
  bool logy = false;
  bool ref_comp = false;   // dashed predicted_bound_proj median curve
  bool ref_lower = false;  // dashed predicted_bound_lower median curve
  std::string output_svg;
};

/// Render the plot: one polyline per group (median y per distinct x), axes
/// with ticks, optional reference curves, slope annotations on log-log plots.
/// Throws MissingColumn when a referenced column is absent.
void render_plot(const PlotSpec& spec);

}  // namespace rsub
