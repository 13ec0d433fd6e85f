#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bp/tensor.hpp"

namespace bp {

// Comma-separated, header row, UTF-8, LF line endings. Doubles are printed
// with %.17g so files are byte-stable across runs.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_double(double v);

// Binary PGM (P5), 8-bit, pixel values clamped to [0,1].
void write_pgm(const std::filesystem::path& path, const Tensor& image, int side);
Tensor read_pgm(const std::filesystem::path& path, int* side_out = nullptr);

// Minimal line plot rendered into a PGM raster (curve + axes).
void write_line_plot(const std::filesystem::path& path, const std::vector<double>& xs,
                     const std::vector<std::vector<double>>& series, int width = 400,
                     int height = 240);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bp
