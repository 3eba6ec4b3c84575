#ifndef TOOLSCHED_SVG_HPP_
#define TOOLSCHED_SVG_HPP_

#include <string>
#include <vector>

#include "toolsched/ppo.hpp"
#include "toolsched/trace.hpp"
#include "toolsched/world.hpp"

namespace toolsched {

/// Arena with kind-coded server discs, believed (dashed) and true (solid)
/// paths, and markers where corrections executed. Output bytes depend only
/// on the inputs.
std::string render_trajectory_svg(const std::vector<TraceRecord>& trace, const WorldConfig& cfg,
                                  const std::string& title);

struct CurveSeries {
  std::string label;
  std::vector<std::vector<CurvePoint>> seeds;
};

struct ReferenceLine {
  std::string label;
  double value = 0.0;
};

/// Mean learning curve per series with a shaded min-max band across seeds,
/// plus horizontal lines for scripted-policy returns.
std::string render_curves_svg(const std::vector<CurveSeries>& series,
                              const std::vector<ReferenceLine>& references,
                              const std::string& title);

}  // namespace toolsched

#endif  // TOOLSCHED_SVG_HPP_
