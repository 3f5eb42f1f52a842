#include "plate/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace plate {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string svg_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

// Piecewise-linear ramp, dark blue -> teal -> yellow.
std::string ramp(double t) {
  static const double stops[3][3] = {{0.18, 0.11, 0.37}, {0.13, 0.57, 0.55}, {0.99, 0.91, 0.15}};
  t = std::clamp(t, 0.0, 1.0);
  const int seg = t < 0.5 ? 0 : 1;
  const double s = t < 0.5 ? 2.0 * t : 2.0 * t - 1.0;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(255.0 * ((1.0 - s) * stops[seg][c] + s * stops[seg + 1][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_for_write(path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::logic_error("CSV row width differs from header");
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open_for_write(path);
  out << value.dump(2) << "\n";
}

void write_svg_heatmap(const std::filesystem::path& path, const Mat& values, double x_lo, double x_hi,
                       double y_lo, double y_hi, const std::string& title) {
  const Index ny = values.rows(), nx = values.cols();
  const double width = 640.0, height = 400.0, margin = 50.0;
  const double cw = width / static_cast<double>(nx), ch = height / static_cast<double>(ny);

  double lo = INFINITY, hi = -INFINITY;
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;

  auto out = open_for_write(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_number(width + 2 * margin) << "\" height=\""
      << svg_number(height + 2 * margin) << "\">\n";
  out << "<text x=\"" << svg_number(margin) << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n";
  for (Index r = 0; r < ny; ++r) {
    for (Index c = 0; c < nx; ++c) {
      const double v = values(r, c);
      const std::string fill = std::isfinite(v) ? ramp((v - lo) / (hi - lo)) : "#000000";
      const double x = margin + static_cast<double>(c) * cw;
      const double y = margin + static_cast<double>(ny - 1 - r) * ch;
      out << "<rect x=\"" << svg_number(x) << "\" y=\"" << svg_number(y) << "\" width=\"" << svg_number(cw + 0.05)
          << "\" height=\"" << svg_number(ch + 0.05) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  const double base = margin + height + 18.0;
  out << "<text x=\"" << svg_number(margin) << "\" y=\"" << svg_number(base)
      << "\" font-family=\"sans-serif\" font-size=\"11\">Re " << format_number(x_lo) << " .. "
      << format_number(x_hi) << ", Im " << format_number(y_lo) << " .. " << format_number(y_hi)
      << "; colour range " << format_number(lo) << " .. " << format_number(hi) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace plate
