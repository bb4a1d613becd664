#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "commands.hpp"

namespace absvo::cli {

namespace {

constexpr double kSize = 600.0;
constexpr double kMargin = 40.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Largest 1/2/5 x 10^k not exceeding a fifth of the extent.
double nice_length(double extent) {
  const double target = std::max(extent / 5.0, 1e-9);
  const double base = std::pow(10.0, std::floor(std::log10(target)));
  for (double m : {5.0, 2.0, 1.0})
    if (m * base <= target) return m * base;
  return base;
}

}  // namespace

std::string trajectory_svg(const Trajectory& estimate, const Trajectory& reference) {
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_z = min_x, max_z = -min_x;
  for (const Trajectory* t : {&estimate, &reference})
    for (const auto& p : t->poses) {
      min_x = std::min(min_x, p.translation.x());
      max_x = std::max(max_x, p.translation.x());
      min_z = std::min(min_z, p.translation.z());
      max_z = std::max(max_z, p.translation.z());
    }
  if (!std::isfinite(min_x)) min_x = max_x = min_z = max_z = 0.0;
  const double extent = std::max({max_x - min_x, max_z - min_z, 1e-6});
  const double scale = (kSize - 2 * kMargin) / extent;
  // Image y grows downward, so z is flipped to put forward motion at the top.
  auto sx = [&](double x) { return kMargin + (x - min_x) * scale; };
  auto sy = [&](double z) { return kSize - kMargin - (z - min_z) * scale; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kSize) +
                    "\" height=\"" + fmt(kSize) + "\" viewBox=\"0 0 " + fmt(kSize) + " " +
                    fmt(kSize) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto polyline = [&](const Trajectory& t, const char* id, const char* colour) {
    svg += std::string("<polyline id=\"") + id + "\" fill=\"none\" stroke=\"" + colour +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) svg += ' ';
      svg += fmt(sx(t.poses[i].translation.x())) + "," + fmt(sy(t.poses[i].translation.z()));
    }
    svg += "\"/>\n";
  };
  polyline(reference, "reference", "black");
  polyline(estimate, "estimate", "red");

  const double bar = nice_length(extent);
  const double y = kSize - kMargin / 2;
  svg += "<g id=\"scale-bar\"><line x1=\"" + fmt(kMargin) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
         fmt(kMargin + bar * scale) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"black\" stroke-width=\"2\"/>";
  char label[64];
  std::snprintf(label, sizeof label, "%g m", bar);
  svg += "<text x=\"" + fmt(kMargin) + "\" y=\"" + fmt(y - 5) +
         "\" font-size=\"12\" font-family=\"sans-serif\">" + label + "</text></g>\n";
  svg += "<text x=\"" + fmt(kSize - kMargin) + "\" y=\"" + fmt(kMargin / 2) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"end\">"
         "x-z view; black: reference, red: estimate</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace absvo::cli
