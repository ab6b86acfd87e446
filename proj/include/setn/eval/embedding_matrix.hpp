#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "setn/core/errors.hpp"

namespace setn {

/// Stock ids plus a row-major [N×d] matrix of their embeddings. Rows are
/// kept as given; similarity code normalizes on the fly.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  /// Throws DimensionError on a size mismatch, DataError on a duplicate id,
  /// a non-finite value or a zero-norm row.
  EmbeddingMatrix(std::vector<std::size_t> ids, std::size_t dim,
                  std::vector<double> values)
      : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw DimensionError("embeddings: dimension must be positive");
    if (values_.size() != ids_.size() * dim_) {
      throw DimensionError("embeddings: " + std::to_string(values_.size()) +
                           " values for " + std::to_string(ids_.size()) +
                           " rows of width " + std::to_string(dim_));
    }
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      if (!index_.emplace(ids_[r], r).second) {
        throw DataError("embeddings: duplicate id " + std::to_string(ids_[r]));
      }
      double norm = 0.0;
      for (double v : row(r)) {
        if (!std::isfinite(v)) {
          throw DataError("embeddings: non-finite value for id " +
                          std::to_string(ids_[r]));
        }
        norm += v * v;
      }
      if (norm == 0.0) {
        throw DataError("embeddings: zero-norm row for id " +
                        std::to_string(ids_[r]));
      }
    }
  }

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::size_t>& ids() const { return ids_; }
  const std::vector<double>& values() const { return values_; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }

  bool contains(std::size_t id) const { return index_.count(id) != 0; }

  /// Row of a stock id; DataError when absent.
  std::size_t row_of(std::size_t id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw DataError("embeddings: unknown stock id " + std::to_string(id));
    }
    return it->second;
  }

 private:
  std::vector<std::size_t> ids_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::unordered_map<std::size_t, std::size_t> index_;
};

enum class EmbeddingFormat { kTsv, kBinary };

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    int c = in.get();
    if (c == EOF) throw FormatError("embeddings: truncated header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

/// tsv: header "id\tdim=<d>", then "id\tv1\t...\tvd" with 9 significant
/// digits. binary: "SETE", u64 N, u64 d, then N·d little-endian float32
/// values row-major (no ids).
inline void export_embeddings(const EmbeddingMatrix& e, const std::string& path,
                              EmbeddingFormat format) {
  if (e.empty()) throw ContractError("export_embeddings: empty matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embeddings to " + path);
  if (format == EmbeddingFormat::kTsv) {
    out << "id\tdim=" << e.dim() << '\n';
    char buf[32];
    for (std::size_t r = 0; r < e.rows(); ++r) {
      out << e.ids()[r];
      for (double v : e.row(r)) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        out << '\t' << buf;
      }
      out << '\n';
    }
  } else {
    out.write("SETE", 4);
    detail::put_u64(out, e.rows());
    detail::put_u64(out, e.dim());
    for (double v : e.values()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  if (!out) throw DataError("write failed for " + path);
}

inline EmbeddingMatrix import_embeddings_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header");
  std::size_t dim = 0;
  if (std::sscanf(line.c_str(), "id\tdim=%zu", &dim) != 1 || dim == 0) {
    throw FormatError(path + ":1: expected header 'id<TAB>dim=<d>'");
  }
  std::vector<std::size_t> ids;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, '\t')) cells.push_back(cell);
    if (cells.size() != dim + 1) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim + 1) + " fields, found " +
                        std::to_string(cells.size()));
    }
    try {
      std::size_t used = 0;
      ids.push_back(std::stoull(cells[0], &used));
      if (used != cells[0].size()) throw std::invalid_argument("id");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        values.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument("value");
      }
    } catch (const std::logic_error&) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": unparsable number");
    }
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

/// Row r of the binary file becomes stock id r.
inline EmbeddingMatrix import_embeddings_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SETE", 4) != 0) {
    throw FormatError(path + ": not an embedding file (bad magic)");
  }
  const std::uint64_t n = detail::get_u64(in);
  const std::uint64_t d = detail::get_u64(in);
  if (d == 0 || n > (std::uint64_t{1} << 40) / d) {
    throw FormatError(path + ": implausible shape");
  }
  std::vector<double> values(n * d);
  for (auto& v : values) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
      throw FormatError(path + ": truncated payload");
    }
    const std::uint32_t bits = std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                               std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
    v = std::bit_cast<float>(bits);
  }
  if (in.peek() != EOF) throw FormatError(path + ": trailing bytes");
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return EmbeddingMatrix(std::move(ids), d, std::move(values));
}

}  // namespace setn
