#include "bp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bp {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CsvWriter: empty header");
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match header");
  rows_.push_back(cells);
}

void CsvWriter::add_row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  add_row(s);
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("CsvWriter: cannot open '" + path.string() + "'");
  auto emit = [&f](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) f << ',';
      f << cells[i];
    }
    f << '\n';
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  if (!f) throw std::runtime_error("CsvWriter: write failed for '" + path.string() + "'");
}

void write_pgm(const std::filesystem::path& path, const Tensor& image, int side) {
  if (static_cast<int>(image.size()) != side * side)
    throw std::invalid_argument("write_pgm: image size does not match side*side");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_pgm: cannot open '" + path.string() + "'");
  f << "P5\n" << side << ' ' << side << "\n255\n";
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    f.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  if (!f) throw std::runtime_error("write_pgm: write failed for '" + path.string() + "'");
}

Tensor read_pgm(const std::filesystem::path& path, int* side_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pgm: cannot open '" + path.string() + "'");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("read_pgm: unsupported PGM in '" + path.string() + "'");
  if (w != h) throw std::runtime_error("read_pgm: expected a square image");
  f.get();  // single whitespace after header
  Tensor img({w * h});
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int c = f.get();
    if (c == EOF) throw std::runtime_error("read_pgm: truncated file");
    img[i] = static_cast<double>(c) / 255.0;
  }
  if (side_out) *side_out = w;
  return img;
}

void write_line_plot(const std::filesystem::path& path, const std::vector<double>& xs,
                     const std::vector<std::vector<double>>& series, int width, int height) {
  if (xs.size() < 2) throw std::invalid_argument("write_line_plot: need at least 2 points");
  for (const auto& s : series)
    if (s.size() != xs.size())
      throw std::invalid_argument("write_line_plot: series length mismatch");
  double xlo = xs[0], xhi = xs[0], ylo = 0.0, yhi = 0.0;
  bool first = true;
  for (double x : xs) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
  }
  for (const auto& s : series)
    for (double y : s) {
      if (first) {
        ylo = yhi = y;
        first = false;
      }
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  if (xhi == xlo) xhi = xlo + 1.0;
  if (yhi == ylo) yhi = ylo + 1.0;

  const int margin = 12;
  std::vector<unsigned char> px(static_cast<std::size_t>(width) * height, 255);
  auto set = [&](int x, int y, unsigned char v) {
    if (x >= 0 && x < width && y >= 0 && y < height)
      px[static_cast<std::size_t>(y) * width + x] = v;
  };
  auto to_px = [&](double x, double y) {
    const int cx = margin + static_cast<int>(std::lround((x - xlo) / (xhi - xlo) * (width - 2 * margin)));
    const int cy = height - margin -
                   static_cast<int>(std::lround((y - ylo) / (yhi - ylo) * (height - 2 * margin)));
    return std::pair<int, int>(cx, cy);
  };
  // axes
  for (int x = margin; x < width - margin; ++x) set(x, height - margin, 128);
  for (int y = margin; y < height - margin; ++y) set(margin, y, 128);
  // one gray level per series
  for (std::size_t s = 0; s < series.size(); ++s) {
    const unsigned char shade = static_cast<unsigned char>(series.size() > 1 ? 160 * s / (series.size() - 1) : 0);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      auto [x0, y0] = to_px(xs[i], series[s][i]);
      auto [x1, y1] = to_px(xs[i + 1], series[s][i + 1]);
      const int n = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
      for (int k = 0; k <= n; ++k) {
        const double f = static_cast<double>(k) / n;
        set(static_cast<int>(std::lround(x0 + f * (x1 - x0))),
            static_cast<int>(std::lround(y0 + f * (y1 - y0))), shade);
      }
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_line_plot: cannot open '" + path.string() + "'");
  f << "P5\n" << width << ' ' << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace bp
