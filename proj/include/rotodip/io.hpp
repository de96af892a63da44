#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rotodip/errors.hpp"

namespace rotodip {

/// Shortest round-trip decimal representation (17 significant digits at most).
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Deterministic CSV accumulator: fixed header, '\n' line endings, shortest
/// round-trip floats, empty cells for absent values (never NaN literals).
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += header[i];
    }
    buf_ += '\n';
    cols_ = header.size();
  }

  class Row {
   public:
    explicit Row(Csv& csv) : csv_(csv) {}
    Row& add(double v) {
      cell(format_double(v));
      return *this;
    }
    Row& add(int v) {
      cell(std::to_string(v));
      return *this;
    }
    Row& add(const std::string& v) {
      std::string s = v;
      for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
      cell(s);
      return *this;
    }
    Row& add(std::optional<double> v) {
      cell(v ? format_double(*v) : std::string());
      return *this;
    }
    ~Row() {
      while (n_ < csv_.cols_) cell(std::string());
      csv_.buf_ += '\n';
    }

   private:
    void cell(const std::string& s) {
      if (n_) csv_.buf_ += ',';
      csv_.buf_ += s;
      ++n_;
    }
    Csv& csv_;
    std::size_t n_ = 0;
  };

  Row row() { return Row(*this); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
  std::size_t cols_ = 0;
  friend class Row;
};

/// Plain-text PGM (P2), 255 gray levels, values in [0, 1] mapped linearly,
/// black = 0. rows[r] is one raster line, top row first.
inline std::string pgm_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw DomainError("pgm_from_rows: empty raster");
  const std::size_t w = rows.front().size();
  std::string out = "P2\n" + std::to_string(w) + " " + std::to_string(rows.size()) + "\n255\n";
  for (const auto& r : rows) {
    if (r.size() != w) throw DomainError("pgm_from_rows: ragged raster");
    for (std::size_t i = 0; i < w; ++i) {
      if (i) out += ' ';
      int v = static_cast<int>(r[i] * 255.0 + 0.5);
      if (v < 0) v = 0;
      if (v > 255) v = 255;
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace rotodip
