#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qpm {

/// Dense row-major matrix parsed from `[a, b; c, d]`. A bare scalar is 1x1.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::size_t size() const noexcept { return values.size(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix parse_matrix(std::string_view text);
std::string format_matrix(const Matrix& m);

/// Flat `key = value` text file. `#` starts a comment; blank lines are ignored;
/// later assignments to the same key replace earlier ones. Key order is kept.
class KeyValueFile {
public:
  static KeyValueFile parse(std::string_view text, std::string source = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;

  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  long long integer(std::string_view key) const;
  long long integer_or(std::string_view key, long long fallback) const;
  Matrix matrix(std::string_view key) const;

  void set(std::string key, std::string value);

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }
  const std::string& source() const noexcept { return source_; }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string source_;
};

/// 64-bit FNV-1a, used to content-address stage artifacts.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xCBF29CE484222325ULL);
std::string hex64(std::uint64_t v);

/// 17 significant digits, so the text parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view s);

}  // namespace qpm
