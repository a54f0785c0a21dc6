#include "evor/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace evor::harness {

namespace {

constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string render_sweep_svg(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ParseError("plot: empty sweep table");
  std::vector<SweepRow> r = rows;
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  const double vmin = r.front().value, vmax = r.back().value;
  const bool log_x = vmin > 0.0 && vmax / vmin >= 8.0;
  auto xt = [&](double v) { return log_x ? std::log10(v) : v; };
  double x0 = xt(vmin), x1 = xt(vmax);
  if (x1 - x0 < 1e-12) {
    x0 -= 1.0;
    x1 += 1.0;
  }
  double y0 = 0.0, y1 = 1.0;
  for (const auto& p : r) {
    y0 = std::min({y0, p.mean_return - p.std_return, p.success_rate});
    y1 = std::max({y1, p.mean_return + p.std_return, p.success_rate});
  }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (xt(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - (v - y0) / (y1 - y0)) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f3(kW) + "\" height=\"" + f3(kH) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f3(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">return vs " + r.front().axis +
       " (" + std::to_string(r.front().seeds) + " seeds x " + std::to_string(r.front().episodes) +
       " episodes)</text>\n";
  s += "<line x1=\"" + f3(kLeft) + "\" y1=\"" + f3(kTop + ph) + "\" x2=\"" + f3(kLeft + pw) + "\" y2=\"" +
       f3(kTop + ph) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + f3(kLeft) + "\" y1=\"" + f3(kTop) + "\" x2=\"" + f3(kLeft) + "\" y2=\"" + f3(kTop + ph) +
       "\" stroke=\"black\"/>\n";
  for (const auto& p : r)
    s += "<text x=\"" + f3(px(p.value)) + "\" y=\"" + f3(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
         label(p.value) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y0 + (y1 - y0) * i / 4.0;
    s += "<text x=\"" + f3(kLeft - 6) + "\" y=\"" + f3(py(v) + 4) + "\" text-anchor=\"end\">" + label(v) +
         "</text>\n";
    s += "<line x1=\"" + f3(kLeft) + "\" y1=\"" + f3(py(v)) + "\" x2=\"" + f3(kLeft + pw) + "\" y2=\"" + f3(py(v)) +
         "\" stroke=\"#dddddd\"/>\n";
  }
  s += "<text x=\"" + f3(kLeft + pw / 2) + "\" y=\"" + f3(kH - 14) + "\" text-anchor=\"middle\">" + r.front().axis +
       (log_x ? " (log scale)" : "") + "</text>\n";

  std::string band;
  for (const auto& p : r) band += f3(px(p.value)) + "," + f3(py(p.mean_return + p.std_return)) + " ";
  for (auto it = r.rbegin(); it != r.rend(); ++it)
    band += f3(px(it->value)) + "," + f3(py(it->mean_return - it->std_return)) + " ";
  s += "<polygon points=\"" + band + "\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";

  std::string line, succ;
  for (const auto& p : r) {
    line += f3(px(p.value)) + "," + f3(py(p.mean_return)) + " ";
    succ += f3(px(p.value)) + "," + f3(py(p.success_rate)) + " ";
  }
  s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  s += "<polyline points=\"" + succ + "\" fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"5,4\"/>\n";
  for (const auto& p : r)
    s += "<circle cx=\"" + f3(px(p.value)) + "\" cy=\"" + f3(py(p.mean_return)) + "\" r=\"4\" fill=\"#1f77b4\"/>\n";
  s += "<text x=\"" + f3(kLeft + 10) + "\" y=\"" + f3(kTop + 14) +
       "\" fill=\"#1f77b4\">mean return +- std</text>\n";
  s += "<text x=\"" + f3(kLeft + 10) + "\" y=\"" + f3(kTop + 30) + "\" fill=\"#d62728\">success rate</text>\n";
  s += "</svg>\n";
  return s;
}

std::filesystem::path emit_plots(const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir,
                                 const std::string& stem) {
  const std::string svg = render_sweep_svg(rows);
  std::filesystem::create_directories(out_dir);
  const auto svg_path = out_dir / (stem + ".svg");
  write_text(svg_path, svg);
  write_text(out_dir / (stem + ".csv"), sweep_to_csv(rows));
  return svg_path;
}

}  // namespace evor::harness
