#include "somn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "somn/csv.hpp"

namespace somn {

namespace {

void append_polyline(std::string& out, std::span<const double> values, double y0, double band_h,
                     int width, const char* color) {
  if (values.empty()) return;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  out += "<polyline fill=\"none\" stroke=\"";
  out += color;
  out += "\" stroke-width=\"1\" points=\"";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(values.size() - 1) * width;
    const double y = y0 + band_h - (values[i] - lo) / (hi - lo) * band_h;
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
    out += buf;
  }
  out += "\"/>\n";
}

}  // namespace

std::string svg_line_plot(std::span<const double> signal, std::span<const double> overlay,
                          std::span<const SvgHighlight> highlights, int width, int height) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const std::size_t n = std::max<std::size_t>(signal.size(), 2);
  for (const auto& h : highlights) {
    const double x0 = static_cast<double>(h.start) / static_cast<double>(n - 1) * width;
    const double x1 = static_cast<double>(h.end) / static_cast<double>(n - 1) * width;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.2f\" y=\"0\" width=\"%.2f\" height=\"%d\" fill=\"%s\" "
                  "fill-opacity=\"0.35\"/>\n",
                  x0, std::max(1.0, x1 - x0), height, h.color.c_str());
    out += buf;
  }

  const bool split = !overlay.empty();
  const double band = split ? height / 2.0 - 8.0 : height - 8.0;
  append_polyline(out, signal, 4.0, band, width, "#1f3a93");
  if (split) append_polyline(out, overlay, height / 2.0 + 4.0, band, width, "#c0392b");
  out += "</svg>\n";
  return out;
}

void write_svg_plot(const std::filesystem::path& path, std::span<const double> signal,
                    std::span<const double> overlay, std::span<const SvgHighlight> highlights) {
  write_text_file(path, svg_line_plot(signal, overlay, highlights));
}

}  // namespace somn
