#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csshap/matrix.hpp"

namespace csshap {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image(int w, int h);
  void set(int x, int y, std::array<std::uint8_t, 3> c);
  std::array<std::uint8_t, 3> get(int x, int y) const;
};

using Rgb = std::array<std::uint8_t, 3>;

// Symmetric diverging scale: -vmax blue, 0 white, +vmax red.
Rgb diverging_color(double value, double vmax);
// 0 white to 1 dark.
Rgb sequential_color(double t);

struct HeatmapSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x_centers;  // one per column
  std::vector<double> y_centers;  // one per row; row 0 is drawn at the bottom
  Matrix<double> values;
  bool diverging = true;
};

inline constexpr int kPanelWidth = 640;
inline constexpr int kPanelHeight = 480;

Image render_heatmap(const HeatmapSpec& spec);
Image render_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<double>& x, const std::vector<double>& y);

void draw_text(Image& img, int x, int y, const std::string& text, Rgb color, int scale = 1);
void write_png(const Image& img, const std::filesystem::path& path);

}  // namespace csshap
