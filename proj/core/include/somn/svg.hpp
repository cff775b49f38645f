#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace somn {

struct SvgHighlight {
  int start = 0;
  int end = 0;
  std::string color = "#ffcc00";
};

// Minimal line plot: the signal as a polyline, an optional second trace
// underneath (e.g. a saliency map), and highlighted x-ranges.
std::string svg_line_plot(std::span<const double> signal, std::span<const double> overlay,
                          std::span<const SvgHighlight> highlights, int width = 1200,
                          int height = 320);

void write_svg_plot(const std::filesystem::path& path, std::span<const double> signal,
                    std::span<const double> overlay, std::span<const SvgHighlight> highlights);

}  // namespace somn
