#pragma once

// On-disk formats.
//
// Unified matrix, two text files:
//   <stem>.coo    "cdrflow-coo 1" / "<rows> <cols> <nnz>" / one "<row> <col>"
//                 line per unit entry, row-major order.
//   <stem>.index  "cdrflow-index 1" / "row_blocks <a> <b> <c>" /
//                 "col_blocks <s> <t>" / "users" + one token per row /
//                 "source_items" + tokens / "target_items" + tokens.
// Split record: "cdrflow-split 1", seed, fraction, the overlap users, then
//   "cold_source_eval <n>" and "cold_target_eval <n>" sections of
//   "<user>\t<held-out item>" lines.
// Dense matrix: "CDRFDM01", u64 rows, u64 cols, row-major f64 (little endian).
// SVD cache: "CDRFSVD1", u64 matrix hash, u64 requested rank, u64 seed,
//   u64 items, u64 rank, u8 clamped, f64 singular values, f64 vectors
//   column-major.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/graph_ops.hpp"

namespace cdrflow::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary = false) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

// Rating file in the ingestion format, every pair at the same rating.
inline void write_ratings(const std::filesystem::path& p, const DomainDataset& ds, std::string_view rating = "5") {
  auto out = open_out(p);
  for (const auto& it : ds.interactions())
    out << ds.users()[static_cast<std::size_t>(it.user)] << '\t' << ds.items()[static_cast<std::size_t>(it.item)]
        << '\t' << rating << '\n';
}

namespace detail {

class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(path_, line_ + 1, "unexpected end of file");
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // "<key> <values...>" with the expected key.
  std::istringstream keyed(std::string_view key) {
    const std::string line = next();
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) fail("expected '" + std::string(key) + "'");
    return ss;
  }

  void expect(std::string_view exact) {
    if (next() != exact) fail("expected '" + std::string(exact) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_, what); }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t line_ = 0;
};

template <class T>
T read_value(std::istringstream& ss, LineReader& r) {
  T v{};
  if (!(ss >> v)) r.fail("malformed value");
  return v;
}

inline std::vector<std::string> read_tokens(LineReader& r, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(r.next());
  return out;
}

}  // namespace detail

inline void save_unified(const UnifiedMatrix& m, const std::filesystem::path& stem) {
  {
    auto out = open_out(stem.string() + ".coo");
    SparseMatrix c = m.matrix;
    c.makeCompressed();
    out << "cdrflow-coo 1\n" << c.rows() << ' ' << c.cols() << ' ' << c.nonZeros() << '\n';
    for (Index i = 0; i < c.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(c, i); it; ++it) {
        if (it.value() != 1.0) throw DataError("unified matrix must be binary");
        out << it.row() << ' ' << it.col() << '\n';
      }
  }
  auto out = open_out(stem.string() + ".index");
  out << "cdrflow-index 1\n";
  out << "row_blocks " << m.row_blocks[0].size() << ' ' << m.row_blocks[1].size() << ' ' << m.row_blocks[2].size()
      << '\n';
  out << "col_blocks " << m.source_cols.size() << ' ' << m.target_cols.size() << '\n';
  out << "users\n";
  for (const auto& u : m.users) out << u << '\n';
  out << "source_items\n";
  for (const auto& i : m.source_items) out << i << '\n';
  out << "target_items\n";
  for (const auto& i : m.target_items) out << i << '\n';
}

inline UnifiedMatrix load_unified(const std::filesystem::path& stem) {
  UnifiedMatrix m;
  const std::string index_path = stem.string() + ".index";
  {
    auto in = open_in(index_path);
    detail::LineReader r(in, index_path);
    r.expect("cdrflow-index 1");
    auto rb = r.keyed("row_blocks");
    const auto a = detail::read_value<Index>(rb, r);
    const auto b = detail::read_value<Index>(rb, r);
    const auto c = detail::read_value<Index>(rb, r);
    auto cb = r.keyed("col_blocks");
    const auto s = detail::read_value<Index>(cb, r);
    const auto t = detail::read_value<Index>(cb, r);
    if (a < 0 || b < 0 || c < 0 || s < 0 || t < 0) r.fail("negative block size");
    m.row_blocks = {IndexRange{0, a}, IndexRange{a, a + b}, IndexRange{a + b, a + b + c}};
    m.source_cols = {0, s};
    m.target_cols = {s, s + t};
    r.expect("users");
    m.users = detail::read_tokens(r, static_cast<std::size_t>(a + b + c));
    r.expect("source_items");
    m.source_items = detail::read_tokens(r, static_cast<std::size_t>(s));
    r.expect("target_items");
    m.target_items = detail::read_tokens(r, static_cast<std::size_t>(t));
  }
  m.index_users();

  const std::string coo_path = stem.string() + ".coo";
  auto in = open_in(coo_path);
  detail::LineReader r(in, coo_path);
  r.expect("cdrflow-coo 1");
  std::istringstream dims(r.next());
  Index rows = 0, cols = 0, nnz = 0;
  if (!(dims >> rows >> cols >> nnz)) r.fail("malformed dimensions");
  if (rows != static_cast<Index>(m.users.size()) || cols != m.source_cols.size() + m.target_cols.size())
    r.fail("matrix shape disagrees with the index sidecar");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (Index e = 0; e < nnz; ++e) {
    std::istringstream ss(r.next());
    Index i = 0, j = 0;
    if (!(ss >> i >> j) || i < 0 || i >= rows || j < 0 || j >= cols) r.fail("bad entry");
    triplets.emplace_back(i, j, 1.0);
  }
  m.matrix.resize(rows, cols);
  m.matrix.setFromTriplets(triplets.begin(), triplets.end());
  m.matrix.makeCompressed();
  if (m.matrix.nonZeros() != nnz) throw DataError(coo_path + ": duplicate entries");
  return m;
}

inline void save_split(const ColdStartSplit& s, const std::filesystem::path& p) {
  auto out = open_out(p);
  out << "cdrflow-split 1\n";
  out << "seed " << s.seed << '\n';
  out << "fraction " << format_double(s.fraction) << '\n';
  out << "overlap_users " << s.overlap_users.size() << '\n';
  for (const auto& u : s.overlap_users) out << u << '\n';
  auto section = [&](const char* name, const std::vector<std::string>& users) {
    out << name << ' ' << users.size() << '\n';
    for (const auto& u : users) out << u << '\t' << s.heldout_positive.at(u) << '\n';
  };
  section("cold_source_eval", s.cold_source_eval);
  section("cold_target_eval", s.cold_target_eval);
}

inline ColdStartSplit load_split(const std::filesystem::path& p) {
  auto in = open_in(p);
  detail::LineReader r(in, p.string());
  r.expect("cdrflow-split 1");
  ColdStartSplit s;
  auto seed = r.keyed("seed");
  s.seed = detail::read_value<std::uint64_t>(seed, r);
  auto frac = r.keyed("fraction");
  const auto frac_text = detail::read_value<std::string>(frac, r);
  const auto parsed = cdrflow::detail::parse_real(frac_text);
  if (!parsed) r.fail("bad fraction");
  s.fraction = *parsed;
  auto ov = r.keyed("overlap_users");
  s.overlap_users = detail::read_tokens(r, detail::read_value<std::size_t>(ov, r));
  auto section = [&](const char* name, std::vector<std::string>& users) {
    auto head = r.keyed(name);
    const auto n = detail::read_value<std::size_t>(head, r);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string line = r.next();
      const auto tab = line.find('\t');
      if (tab == std::string::npos) r.fail("expected '<user>\\t<item>'");
      users.push_back(line.substr(0, tab));
      s.heldout_positive.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
  };
  section("cold_source_eval", s.cold_source_eval);
  section("cold_target_eval", s.cold_target_eval);
  return s;
}

namespace detail {
inline void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline std::uint64_t get_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(path + ": truncated file");
  return v;
}

inline void get_doubles(std::istream& in, double* dst, std::size_t n, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(double))))
    throw DataError(path + ": truncated file");
}
}  // namespace detail

inline void save_dense(const DenseMatrix& m, const std::filesystem::path& p) {
  auto out = open_out(p, true);
  out.write("CDRFDM01", 8);
  detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline DenseMatrix load_dense(const std::filesystem::path& p) {
  auto in = open_in(p, true);
  char magic[8];
  if (!in.read(magic, 8) || std::string_view(magic, 8) != "CDRFDM01") throw DataError(p.string() + ": not a dense matrix file");
  const auto rows = detail::get_u64(in, p.string());
  const auto cols = detail::get_u64(in, p.string());
  DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  detail::get_doubles(in, m.data(), static_cast<std::size_t>(m.size()), p.string());
  return m;
}

struct SvdCacheKey {
  std::uint64_t matrix_hash = 0;
  Index requested_rank = 0;
  std::uint64_t seed = 0;
  friend bool operator==(const SvdCacheKey&, const SvdCacheKey&) = default;
};

inline std::string svd_cache_name(const SvdCacheKey& key) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "svd-%016llx-k%lld-s%llu.bin", static_cast<unsigned long long>(key.matrix_hash),
                static_cast<long long>(key.requested_rank), static_cast<unsigned long long>(key.seed));
  return buf;
}

inline void save_svd(const SvdResult& svd, const SvdCacheKey& key, const std::filesystem::path& p) {
  auto out = open_out(p, true);
  out.write("CDRFSVD1", 8);
  detail::put_u64(out, key.matrix_hash);
  detail::put_u64(out, static_cast<std::uint64_t>(key.requested_rank));
  detail::put_u64(out, key.seed);
  detail::put_u64(out, static_cast<std::uint64_t>(svd.right_vectors.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(svd.rank));
  const char clamped = svd.rank_clamped ? 1 : 0;
  out.write(&clamped, 1);
  out.write(reinterpret_cast<const char*>(svd.singular_values.data()),
            static_cast<std::streamsize>(svd.singular_values.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(svd.right_vectors.data()),
            static_cast<std::streamsize>(svd.right_vectors.size() * sizeof(double)));
}

// Returns nullopt when the file's key does not match.
inline std::optional<SvdResult> load_svd(const std::filesystem::path& p, const SvdCacheKey& expected) {
  auto in = open_in(p, true);
  char magic[8];
  if (!in.read(magic, 8) || std::string_view(magic, 8) != "CDRFSVD1") throw DataError(p.string() + ": not an SVD cache file");
  SvdCacheKey key;
  key.matrix_hash = detail::get_u64(in, p.string());
  key.requested_rank = static_cast<Index>(detail::get_u64(in, p.string()));
  key.seed = detail::get_u64(in, p.string());
  if (!(key == expected)) return std::nullopt;
  const auto n = static_cast<Index>(detail::get_u64(in, p.string()));
  const auto rank = static_cast<Index>(detail::get_u64(in, p.string()));
  char clamped = 0;
  if (!in.read(&clamped, 1)) throw DataError(p.string() + ": truncated file");
  SvdResult svd;
  svd.requested_rank = key.requested_rank;
  svd.seed = key.seed;
  svd.rank = rank;
  svd.rank_clamped = clamped != 0;
  svd.singular_values.resize(rank);
  svd.right_vectors.resize(n, rank);
  detail::get_doubles(in, svd.singular_values.data(), static_cast<std::size_t>(rank), p.string());
  detail::get_doubles(in, svd.right_vectors.data(), static_cast<std::size_t>(n * rank), p.string());
  return svd;
}

inline std::string read_file(const std::filesystem::path& p) {
  auto in = open_in(p, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cdrflow::io
