#include "csshap/heatmap.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>

#include "csshap/error.hpp"

namespace csshap {

namespace {

struct Glyph {
  char c;
  std::uint8_t rows[7];
};

// 5x7 bitmap font, bit 4 is the leftmost column.
constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'#', {0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
};

const Glyph* find_glyph(char c) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont) {
    if (g.c == u) return &g;
  }
  return nullptr;
}

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kRed{178, 24, 43};
constexpr Rgb kBlue{33, 102, 172};

constexpr int kLeft = 80;
constexpr int kRight = 540;
constexpr int kTop = 40;
constexpr int kBottom = 420;

Rgb mix(Rgb a, Rgb b, double t) {
  Rgb out{};
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
        std::lround((1.0 - t) * a[static_cast<std::size_t>(i)] + t * b[static_cast<std::size_t>(i)]));
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && std::abs(v) < 1.0) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  }
  return buf;
}

int text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 6 * scale; }

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x) img.set(x, y, c);
  }
}

void draw_frame(Image& img) {
  fill_rect(img, kLeft - 1, kTop - 1, kRight + 1, kTop, kBlack);
  fill_rect(img, kLeft - 1, kBottom, kRight + 1, kBottom + 1, kBlack);
  fill_rect(img, kLeft - 1, kTop - 1, kLeft, kBottom + 1, kBlack);
  fill_rect(img, kRight, kTop - 1, kRight + 1, kBottom + 1, kBlack);
}

// Tick labels for n positions spread across [lo, hi) pixels.
void draw_x_ticks(Image& img, const std::vector<double>& centers) {
  const int n = static_cast<int>(centers.size());
  const int step = std::max(1, n / 6);
  for (int i = 0; i < n; i += step) {
    const int x = kLeft + static_cast<int>((i + 0.5) * (kRight - kLeft) / n);
    fill_rect(img, x, kBottom, x + 1, kBottom + 5, kBlack);
    const std::string s = tick_label(centers[static_cast<std::size_t>(i)]);
    draw_text(img, x - text_width(s, 1) / 2, kBottom + 8, s, kBlack);
  }
}

void draw_y_ticks(Image& img, const std::vector<double>& centers) {
  const int n = static_cast<int>(centers.size());
  const int step = std::max(1, n / 8);
  for (int i = 0; i < n; i += step) {
    const int y = kBottom - static_cast<int>((i + 0.5) * (kBottom - kTop) / n);
    fill_rect(img, kLeft - 5, y, kLeft, y + 1, kBlack);
    const std::string s = tick_label(centers[static_cast<std::size_t>(i)]);
    draw_text(img, kLeft - 8 - text_width(s, 1), y - 3, s, kBlack);
  }
}

void draw_labels(Image& img, const std::string& title, const std::string& x_label, const std::string& y_label) {
  draw_text(img, (kPanelWidth - text_width(title, 2)) / 2, 10, title, kBlack, 2);
  draw_text(img, (kLeft + kRight - text_width(x_label, 1)) / 2, kBottom + 24, x_label, kBlack);
  draw_text(img, 4, kTop - 14, y_label, kBlack);
}

}  // namespace

Image::Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 255) {
  if (w <= 0 || h <= 0) throw InvalidInputError("image dimensions must be positive");
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  rgb[i] = c[0];
  rgb[i + 1] = c[1];
  rgb[i + 2] = c[2];
}

Rgb Image::get(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

Rgb diverging_color(double value, double vmax) {
  if (!(vmax > 0.0) || value == 0.0) return kWhite;
  const double t = std::clamp(value / vmax, -1.0, 1.0);
  return t > 0 ? mix(kWhite, kRed, t) : mix(kWhite, kBlue, -t);
}

Rgb sequential_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return mix(kWhite, Rgb{8, 48, 107}, t);
}

void draw_text(Image& img, int x, int y, const std::string& text, Rgb color, int scale) {
  int cx = x;
  for (char ch : text) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 5; ++c) {
          if ((g->rows[r] >> (4 - c)) & 1U) fill_rect(img, cx + c * scale, y + r * scale, cx + (c + 1) * scale, y + (r + 1) * scale, color);
        }
      }
    }
    cx += 6 * scale;
  }
}

Image render_heatmap(const HeatmapSpec& spec) {
  const std::size_t rows = spec.values.rows();
  const std::size_t cols = spec.values.cols();
  if (rows == 0 || cols == 0) throw InvalidInputError("heatmap needs a non-empty grid");
  if (spec.x_centers.size() != cols || spec.y_centers.size() != rows) {
    throw InvalidInputError("heatmap axis lengths do not match the grid");
  }
  Image img(kPanelWidth, kPanelHeight);
  double vmax = 0.0;
  double vmin = 0.0;
  if (spec.diverging) {
    for (double v : spec.values.data()) vmax = std::max(vmax, std::abs(v));
  } else {
    vmin = *std::min_element(spec.values.data().begin(), spec.values.data().end());
    vmax = *std::max_element(spec.values.data().begin(), spec.values.data().end());
  }
  for (int py = kTop; py < kBottom; ++py) {
    const auto r = static_cast<std::size_t>((kBottom - 1 - py) * static_cast<int>(rows) / (kBottom - kTop));
    for (int px = kLeft; px < kRight; ++px) {
      const auto c = static_cast<std::size_t>((px - kLeft) * static_cast<int>(cols) / (kRight - kLeft));
      const double v = spec.values(r, c);
      img.set(px, py,
              spec.diverging ? diverging_color(v, vmax)
                             : sequential_color(vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.0));
    }
  }
  draw_frame(img);
  draw_x_ticks(img, spec.x_centers);
  if (rows > 1) draw_y_ticks(img, spec.y_centers);
  draw_labels(img, spec.title, spec.x_label, rows > 1 ? spec.y_label : "");

  // Colour bar with its scale limits.
  constexpr int bar_x0 = kRight + 20;
  constexpr int bar_x1 = kRight + 35;
  for (int py = kTop; py < kBottom; ++py) {
    const double t = static_cast<double>(kBottom - 1 - py) / static_cast<double>(kBottom - kTop - 1);
    const Rgb c = spec.diverging ? diverging_color(2.0 * t - 1.0, 1.0) : sequential_color(t);
    fill_rect(img, bar_x0, py, bar_x1, py + 1, c);
  }
  char buf[32];
  const double lo = spec.diverging ? -vmax : vmin;
  std::snprintf(buf, sizeof buf, "%.2e", vmax);
  draw_text(img, bar_x0 - 10, kTop - 12, buf, kBlack);
  std::snprintf(buf, sizeof buf, "%.2e", lo);
  draw_text(img, bar_x0 - 10, kBottom + 4, buf, kBlack);
  return img;
}

Image render_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInputError("line plot needs matching axes of length >= 2");
  Image img(kPanelWidth, kPanelHeight);
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it;
  const double ymax = *ymax_it > ymin ? *ymax_it : ymin + 1.0;
  const double xmin = x.front();
  const double xmax = x.back() > xmin ? x.back() : xmin + 1.0;
  auto to_px = [&](double xv, double yv) {
    const int px = kLeft + static_cast<int>(std::lround((xv - xmin) / (xmax - xmin) * (kRight - kLeft - 1)));
    const int py = kBottom - 1 - static_cast<int>(std::lround((yv - ymin) / (ymax - ymin) * (kBottom - kTop - 1)));
    return std::pair{px, py};
  };
  for (std::size_t i = 1; i < x.size(); ++i) {
    auto [x0, y0] = to_px(x[i - 1], y[i - 1]);
    auto [x1, y1] = to_px(x[i], y[i]);
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      img.set(x0 + (x1 - x0) * s / steps, y0 + (y1 - y0) * s / steps, kBlue);
    }
  }
  draw_frame(img);
  std::vector<double> xt;
  for (int i = 0; i < 6; ++i) xt.push_back(xmin + (xmax - xmin) * (i + 0.5) / 6.0);
  draw_x_ticks(img, xt);
  std::vector<double> yt;
  for (int i = 0; i < 5; ++i) yt.push_back(ymin + (ymax - ymin) * (i + 0.5) / 5.0);
  draw_y_ticks(img, yt);
  draw_labels(img, title, x_label, y_label);
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace csshap
