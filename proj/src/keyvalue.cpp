#include "qpm/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qpm/error.hpp"

namespace qpm {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw FormatError("not a number: '" + std::string(text) + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix parse_matrix(std::string_view text) {
  text = trim(text);
  Matrix m;
  if (text.empty()) throw FormatError("empty matrix value");
  if (text.front() != '[') {
    m.rows = m.cols = 1;
    m.values = {parse_double(text)};
    return m;
  }
  if (text.back() != ']') throw FormatError("matrix value missing closing ']'");
  text = text.substr(1, text.size() - 2);
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = trim(text.substr(start, end - start));
    std::size_t cols = 0;
    std::size_t p = 0;
    while (p < row.size()) {
      auto q = row.find_first_of(", \t", p);
      if (q == std::string_view::npos) q = row.size();
      if (q > p) {
        m.values.push_back(parse_double(row.substr(p, q - p)));
        ++cols;
      }
      p = q + 1;
    }
    if (m.rows == 0)
      m.cols = cols;
    else if (cols != m.cols)
      throw FormatError("ragged matrix rows");
    ++m.rows;
    start = end + 1;
  }
  if (m.values.empty()) throw FormatError("empty matrix");
  return m;
}

std::string format_matrix(const Matrix& m) {
  if (m.rows == 1 && m.cols == 1) return format_double(m.values[0]);
  std::string out = "[";
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (r) out += "; ";
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out += ", ";
      out += format_double(m(r, c));
    }
  }
  return out + "]";
}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile kv;
  kv.source_ = std::move(source);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(kv.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw FormatError(kv.source_ + ":" + std::to_string(line_no) + ": empty key");
    kv.set(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

bool KeyValueFile::has(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

const std::string& KeyValueFile::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw FormatError(source_ + ": missing key '" + std::string(key) + "'");
}

std::string KeyValueFile::get_or(std::string_view key, std::string fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValueFile::number(std::string_view key) const {
  try {
    return parse_double(get(key));
  } catch (const FormatError& e) {
    throw FormatError(source_ + ": key '" + std::string(key) + "': " + e.what());
  }
}

double KeyValueFile::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long KeyValueFile::integer(std::string_view key) const {
  const double v = number(key);
  if (v != std::floor(v)) throw FormatError(source_ + ": key '" + std::string(key) + "' must be an integer");
  return static_cast<long long>(v);
}

long long KeyValueFile::integer_or(std::string_view key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

Matrix KeyValueFile::matrix(std::string_view key) const {
  try {
    return parse_matrix(get(key));
  } catch (const FormatError& e) {
    throw FormatError(source_ + ": key '" + std::string(key) + "': " + e.what());
  }
}

void KeyValueFile::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace qpm
