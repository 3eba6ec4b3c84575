#include "toolsched/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace toolsched {

namespace {

constexpr const char* kPalette[] = {"#7f7f7f", "#d62728", "#2ca02c", "#1f77b4", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2"};

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_trajectory_svg(const std::vector<TraceRecord>& trace, const WorldConfig& cfg,
                                  const std::string& title) {
  const double size = 600.0;
  const double margin = 40.0;
  const double scale = size / cfg.arena_size;
  auto px = [&](double x) { return margin + x * scale; };
  auto py = [&](double y) { return margin + (cfg.arena_size - y) * scale; };

  std::ostringstream svg;
  const double full = size + 2 * margin;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(full) << "\" height=\""
      << f2(full + 30) << "\" viewBox=\"0 0 " << f2(full) << ' ' << f2(full + 30) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << f2(margin) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  svg << "<rect x=\"" << f2(margin) << "\" y=\"" << f2(margin) << "\" width=\"" << f2(size)
      << "\" height=\"" << f2(size) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (const auto& s : cfg.servers) {
    const bool standard = s.kind == ToolKind::Standard;
    const char* color = standard ? "#1f77b4" : "#ff7f0e";
    svg << "<circle cx=\"" << f2(px(s.position.x())) << "\" cy=\"" << f2(py(s.position.y()))
        << "\" r=\"" << f2(s.range * scale) << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"" << color << "\"/>\n";
    svg << "<text x=\"" << f2(px(s.position.x())) << "\" y=\"" << f2(py(s.position.y()))
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << (standard ? "standard " : "semantic ") << s.index << "</text>\n";
  }

  svg << "<circle cx=\"" << f2(px(cfg.goal_pos.x())) << "\" cy=\"" << f2(py(cfg.goal_pos.y()))
      << "\" r=\"" << f2(cfg.goal_radius * scale)
      << "\" fill=\"#2ca02c\" fill-opacity=\"0.4\" stroke=\"#2ca02c\"/>\n";
  svg << "<rect x=\"" << f2(px(cfg.start_pos.x()) - 4) << "\" y=\""
      << f2(py(cfg.start_pos.y()) - 4) << "\" width=\"8\" height=\"8\" fill=\"black\"/>\n";

  auto polyline = [&](bool truth, const char* color, const char* dash) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash != nullptr) svg << " stroke-dasharray=\"" << dash << "\"";
    svg << " points=\"" << f2(px(cfg.start_pos.x())) << ',' << f2(py(cfg.start_pos.y()));
    for (const auto& r : trace) {
      const Vec2& p = truth ? r.truth : r.believed;
      svg << ' ' << f2(px(p.x())) << ',' << f2(py(p.y()));
    }
    svg << "\"/>\n";
  };
  polyline(false, "#555555", "5,3");
  polyline(true, "#d62728", nullptr);

  for (const auto& r : trace) {
    if (!r.server) continue;
    const auto& s = cfg.servers.at(static_cast<std::size_t>(*r.server));
    const char* color = s.kind == ToolKind::Standard ? "#1f77b4" : "#ff7f0e";
    svg << "<circle cx=\"" << f2(px(r.truth.x())) << "\" cy=\"" << f2(py(r.truth.y()))
        << "\" r=\"4\" fill=\"" << color << "\" stroke=\"black\"/>\n";
  }

  const double ly = full + 12;
  svg << "<text x=\"" << f2(margin) << "\" y=\"" << f2(ly)
      << "\" font-family=\"sans-serif\" font-size=\"11\">dashed: believed path, red: true path, "
         "dots: executed tool calls (blue standard, orange semantic)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string render_curves_svg(const std::vector<CurveSeries>& series,
                              const std::vector<ReferenceLine>& references,
                              const std::string& title) {
  const double w = 640.0;
  const double h = 400.0;
  const double left = 70.0;
  const double right = 170.0;
  const double top = 40.0;
  const double bottom = 50.0;

  struct Band {
    std::vector<double> x, mean, lo, hi;
  };
  std::vector<Band> bands;
  double xmax = 1.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    Band b;
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& c : s.seeds) len = std::min(len, c.size());
    if (s.seeds.empty()) len = 0;
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0.0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      int count = 0;
      for (const auto& c : s.seeds) {
        const double v = c[i].mean_return;
        if (std::isnan(v)) continue;
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++count;
      }
      if (count == 0) continue;
      b.x.push_back(static_cast<double>(s.seeds.front()[i].env_steps));
      b.mean.push_back(sum / count);
      b.lo.push_back(lo);
      b.hi.push_back(hi);
      xmax = std::max(xmax, b.x.back());
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
    }
    bands.push_back(std::move(b));
  }
  for (const auto& r : references) {
    ymin = std::min(ymin, r.value);
    ymax = std::max(ymax, r.value);
  }
  if (!std::isfinite(ymin)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (ymax - ymin < 1e-9) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto X = [&](double x) { return left + (w - left - right) * x / xmax; };
  auto Y = [&](double y) { return top + (h - top - bottom) * (ymax - y) / (ymax - ymin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(w) << "\" height=\"" << f2(h)
      << "\" viewBox=\"0 0 " << f2(w) << ' ' << f2(h) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << f2(left) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  svg << "<rect x=\"" << f2(left) << "\" y=\"" << f2(top) << "\" width=\"" << f2(w - left - right)
      << "\" height=\"" << f2(h - top - bottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    svg << "<text x=\"" << f2(left - 6) << "\" y=\"" << f2(Y(yv) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << f2(yv)
        << "</text>\n";
    const double xv = xmax * k / 4.0;
    svg << "<text x=\"" << f2(X(xv)) << "\" y=\"" << f2(h - bottom + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << static_cast<long long>(std::llround(xv)) << "</text>\n";
  }
  svg << "<text x=\"" << f2((left + w - right) / 2) << "\" y=\"" << f2(h - 12)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">env steps</text>\n";

  int legend = 0;
  auto legend_entry = [&](const std::string& label, const char* color, bool dashed) {
    const double ly = top + 14.0 * legend++;
    svg << "<line x1=\"" << f2(w - right + 10) << "\" y1=\"" << f2(ly) << "\" x2=\""
        << f2(w - right + 30) << "\" y2=\"" << f2(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"4,3\"" : "") << "/>\n";
    svg << "<text x=\"" << f2(w - right + 34) << "\" y=\"" << f2(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(label) << "</text>\n";
  };

  std::size_t color = 0;
  for (const auto& r : references) {
    const char* c = kPalette[color++ % std::size(kPalette)];
    svg << "<line x1=\"" << f2(X(0)) << "\" y1=\"" << f2(Y(r.value)) << "\" x2=\"" << f2(X(xmax))
        << "\" y2=\"" << f2(Y(r.value)) << "\" stroke=\"" << c
        << "\" stroke-width=\"1.5\" stroke-dasharray=\"4,3\"/>\n";
    legend_entry(r.label + " (" + f2(r.value) + ")", c, true);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Band& b = bands[i];
    const char* c = kPalette[color++ % std::size(kPalette)];
    if (!b.x.empty()) {
      svg << "<polygon fill=\"" << c << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < b.x.size(); ++k) svg << f2(X(b.x[k])) << ',' << f2(Y(b.hi[k])) << ' ';
      for (std::size_t k = b.x.size(); k-- > 0;) svg << f2(X(b.x[k])) << ',' << f2(Y(b.lo[k])) << ' ';
      svg << "\"/>\n";
      svg << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
      for (std::size_t k = 0; k < b.x.size(); ++k) {
        if (k) svg << ' ';
        svg << f2(X(b.x[k])) << ',' << f2(Y(b.mean[k]));
      }
      svg << "\"/>\n";
    }
    legend_entry(series[i].label, c, false);
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace toolsched
