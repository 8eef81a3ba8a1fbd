#include "rdc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rdc {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v + 0.0);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v + 0.0);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_bar_chart_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         std::span<const double> edges,
                         std::span<const std::optional<double>> values, bool log_x) {
  if (edges.size() < 2 || values.size() + 1 != edges.size())
    throw std::invalid_argument("bar chart needs one value per bin");
  if (log_x && !(edges.front() > 0)) throw std::invalid_argument("log axis needs positive edges");

  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto xf = [&](double x) { return log_x ? std::log10(x) : x; };
  const double x0 = xf(edges.front()), x1 = xf(edges.back());
  double ymax = 0;
  for (const auto& v : values)
    if (v && std::isfinite(*v)) ymax = std::max(ymax, *v);
  if (!(ymax > 0)) ymax = 1;
  const auto sx = [&](double x) { return left + (xf(x) - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return top + ph - y / ymax * ph; };

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i] || !std::isfinite(*values[i])) continue;
    const double xa = sx(edges[i]), xb = sx(edges[i + 1]);
    const double y = sy(std::max(0.0, *values[i]));
    out << "<rect x=\"" << num(xa) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(0.0, xb - xa))
        << "\" height=\"" << num(top + ph - y) << "\" fill=\"#4477aa\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
      << top + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = log_x ? std::pow(10.0, x0 + (x1 - x0) * t / 4) : x0 + (x1 - x0) * t / 4;
    out << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << label(xv) << "</text>\n";
    const double yv = ymax * t / 4;
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">"
        << label(yv) << "</text>\n";
  }
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 16) << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace rdc
