#pragma once

// Rating-file ingestion, cold-start split simulation and assembly of the
// unified cross-domain interaction matrix.

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdrflow/errors.hpp"
#include "cdrflow/random.hpp"

namespace cdrflow {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Domain { source, target };

inline std::string_view to_string(Domain d) { return d == Domain::source ? "source" : "target"; }
inline Domain other(Domain d) { return d == Domain::source ? Domain::target : Domain::source; }

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

struct Interaction {
  int user = 0;
  int item = 0;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Binarized implicit feedback for one domain. Vocabularies are sorted
// lexicographically; interactions are sorted and unique.
class DomainDataset {
 public:
  DomainDataset() = default;

  DomainDataset(Domain domain, std::vector<std::string> users, std::vector<std::string> items,
                std::vector<Interaction> interactions)
      : domain_(domain), users_(std::move(users)), items_(std::move(items)),
        interactions_(std::move(interactions)) {
    if (!std::is_sorted(users_.begin(), users_.end()) ||
        std::adjacent_find(users_.begin(), users_.end()) != users_.end())
      throw DataError("user vocabulary must be sorted and unique");
    if (!std::is_sorted(items_.begin(), items_.end()) ||
        std::adjacent_find(items_.begin(), items_.end()) != items_.end())
      throw DataError("item vocabulary must be sorted and unique");
    std::sort(interactions_.begin(), interactions_.end());
    interactions_.erase(std::unique(interactions_.begin(), interactions_.end()), interactions_.end());
    offsets_.assign(users_.size() + 1, 0);
    item_ids_.reserve(interactions_.size());
    for (const auto& it : interactions_) {
      if (it.user < 0 || static_cast<std::size_t>(it.user) >= users_.size() || it.item < 0 ||
          static_cast<std::size_t>(it.item) >= items_.size())
        throw DataError("interaction index out of range");
      ++offsets_[static_cast<std::size_t>(it.user) + 1];
      item_ids_.push_back(it.item);
    }
    for (std::size_t u = 0; u < users_.size(); ++u) offsets_[u + 1] += offsets_[u];
  }

  // Builds a dataset from (user token, item token) pairs; duplicates collapse.
  static DomainDataset from_token_pairs(Domain domain,
                                        std::span<const std::pair<std::string, std::string>> pairs) {
    std::vector<std::string> users, items;
    users.reserve(pairs.size());
    items.reserve(pairs.size());
    for (const auto& [u, i] : pairs) {
      users.push_back(u);
      items.push_back(i);
    }
    auto sort_unique = [](std::vector<std::string>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    sort_unique(users);
    sort_unique(items);
    auto pos = [](const std::vector<std::string>& v, const std::string& s) {
      return static_cast<int>(std::lower_bound(v.begin(), v.end(), s) - v.begin());
    };
    std::vector<Interaction> inter;
    inter.reserve(pairs.size());
    for (const auto& [u, i] : pairs) inter.push_back({pos(users, u), pos(items, i)});
    return DomainDataset(domain, std::move(users), std::move(items), std::move(inter));
  }

  Domain domain() const { return domain_; }
  const std::vector<std::string>& users() const { return users_; }
  const std::vector<std::string>& items() const { return items_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }
  std::size_t num_interactions() const { return interactions_.size(); }

  std::span<const int> items_of(std::size_t user) const {
    return {item_ids_.data() + offsets_[user], item_ids_.data() + offsets_[user + 1]};
  }

  std::optional<std::size_t> find_user(std::string_view token) const { return find(users_, token); }
  std::optional<std::size_t> find_item(std::string_view token) const { return find(items_, token); }

  bool has_interaction(std::size_t user, int item) const {
    const auto row = items_of(user);
    return std::binary_search(row.begin(), row.end(), item);
  }

 private:
  static std::optional<std::size_t> find(const std::vector<std::string>& v, std::string_view token) {
    auto it = std::lower_bound(v.begin(), v.end(), token,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == v.end() || *it != token) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
  }

  Domain domain_ = Domain::source;
  std::vector<std::string> users_;
  std::vector<std::string> items_;
  std::vector<Interaction> interactions_;
  std::vector<std::size_t> offsets_;
  std::vector<int> item_ids_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  const char sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = line.find(sep, start);
    out.push_back(trim(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Reads `user<sep>item<sep>rating[<sep>timestamp]` lines, sep being tab or
// comma. A first line whose rating field is non-numeric is a header.
inline std::vector<RatingRecord> read_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rating file: " + path);
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto fields = detail::split_fields(body);
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError(path, line_no, "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    const auto rating = detail::parse_real(fields[2]);
    if (!rating) {
      if (!seen_content) {
        seen_content = true;
        continue;  // header
      }
      throw ParseError(path, line_no, "rating is not a number: '" + std::string(fields[2]) + "'");
    }
    seen_content = true;
    if (!std::isfinite(*rating)) throw ParseError(path, line_no, "rating is not finite");
    if (fields[0].empty() || fields[1].empty()) throw ParseError(path, line_no, "empty user or item id");
    RatingRecord rec{std::string(fields[0]), std::string(fields[1]), *rating, std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) {
      rec.timestamp = detail::parse_int(fields[3]);
      if (!rec.timestamp) throw ParseError(path, line_no, "timestamp is not an integer");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// Keeps ratings >= threshold as positives, dedupes (user, item), then drops
// users with fewer than min_interactions positives. One pass, no fixpoint.
inline DomainDataset binarize_and_filter(std::span<const RatingRecord> records, Domain domain,
                                         double threshold, int min_interactions) {
  std::vector<std::pair<std::string, std::string>> positives;
  for (const auto& r : records)
    if (r.rating >= threshold) positives.emplace_back(r.user_id, r.item_id);
  std::sort(positives.begin(), positives.end());
  positives.erase(std::unique(positives.begin(), positives.end()), positives.end());

  std::vector<std::pair<std::string, std::string>> kept;
  kept.reserve(positives.size());
  for (std::size_t i = 0; i < positives.size();) {
    std::size_t j = i;
    while (j < positives.size() && positives[j].first == positives[i].first) ++j;
    if (static_cast<int>(j - i) >= min_interactions)
      kept.insert(kept.end(), positives.begin() + static_cast<std::ptrdiff_t>(i),
                  positives.begin() + static_cast<std::ptrdiff_t>(j));
    i = j;
  }
  if (kept.empty()) throw DataError("dataset is empty after binarization and filtering");
  return DomainDataset::from_token_pairs(domain, kept);
}

inline DomainDataset load_domain(const std::string& path, Domain domain, double binarize_threshold = 4.0,
                                 int min_interactions = 5) {
  const auto records = read_ratings(path);
  try {
    return binarize_and_filter(records, domain, binarize_threshold, min_interactions);
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Which overlapping users are simulated as cold-start, and the held-out
// positive of each in its cold domain.
struct ColdStartSplit {
  std::vector<std::string> overlap_users;     // sorted
  std::vector<std::string> cold_source_eval;  // keep source data, evaluated in the target domain
  std::vector<std::string> cold_target_eval;  // keep target data, evaluated in the source domain
  std::map<std::string, std::string, std::less<>> heldout_positive;
  std::uint64_t seed = 0;
  double fraction = 0.0;

  // Users evaluated when recommending into `cold_domain`.
  const std::vector<std::string>& cold_users(Domain cold_domain) const {
    return cold_domain == Domain::target ? cold_source_eval : cold_target_eval;
  }

  bool is_cold_in(std::string_view user, Domain cold_domain) const {
    const auto& v = cold_users(cold_domain);
    return std::binary_search(v.begin(), v.end(), user);
  }
};

inline std::vector<std::string> overlapping_users(const DomainDataset& source, const DomainDataset& target) {
  std::vector<std::string> out;
  std::set_intersection(source.users().begin(), source.users().end(), target.users().begin(),
                        target.users().end(), std::back_inserter(out));
  return out;
}

// A split that keeps every overlapping user as a bridge.
inline ColdStartSplit no_cold_split(const DomainDataset& source, const DomainDataset& target) {
  ColdStartSplit s;
  s.overlap_users = overlapping_users(source, target);
  return s;
}

// Shuffles the overlap with the seeded RNG; the first ceil(m/2) users become
// cold in the target domain and the next floor(m/2) cold in the source,
// where m = floor(fraction * |overlap|).
inline ColdStartSplit make_split(const DomainDataset& source, const DomainDataset& target,
                                 double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("split fraction must be in (0, 1]");
  ColdStartSplit split;
  split.seed = seed;
  split.fraction = fraction;
  split.overlap_users = overlapping_users(source, target);
  const auto n = split.overlap_users.size();
  const auto total = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
  if (n == 0 || total == 0)
    throw DataError("split infeasible: " + std::to_string(n) + " overlapping users at fraction " +
                    std::to_string(fraction) + " yields no cold-start user");

  Rng rng(seed);
  auto order = split.overlap_users;
  shuffle(order, rng);
  const std::size_t n_src = (total + 1) / 2;
  auto pick_heldout = [&](const std::string& user, const DomainDataset& cold) {
    const auto u = *cold.find_user(user);
    const auto row = cold.items_of(u);
    const auto choice = row[static_cast<std::size_t>(uniform_index(rng, row.size()))];
    split.heldout_positive.emplace(user, cold.items()[static_cast<std::size_t>(choice)]);
  };
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_src) {
      split.cold_source_eval.push_back(order[i]);
      pick_heldout(order[i], target);
    } else {
      split.cold_target_eval.push_back(order[i]);
      pick_heldout(order[i], source);
    }
  }
  std::sort(split.cold_source_eval.begin(), split.cold_source_eval.end());
  std::sort(split.cold_target_eval.begin(), split.cold_target_eval.end());
  return split;
}

struct IndexRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
  bool contains(Index i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

enum class RowBlock { source_only = 0, overlap = 1, target_only = 2 };

// Binary user x item matrix with rows [source-only | overlap | target-only]
// and columns [source items | target items]. Simulated cold users sit in the
// block of the domain they keep.
struct UnifiedMatrix {
  SparseMatrix matrix;
  std::array<IndexRange, 3> row_blocks;
  IndexRange source_cols;
  IndexRange target_cols;
  std::vector<std::string> users;  // by row
  std::vector<std::string> source_items;
  std::vector<std::string> target_items;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  const IndexRange& block(RowBlock b) const { return row_blocks[static_cast<std::size_t>(b)]; }
  const IndexRange& columns(Domain d) const { return d == Domain::source ? source_cols : target_cols; }
  const std::vector<std::string>& items(Domain d) const {
    return d == Domain::source ? source_items : target_items;
  }

  std::optional<Index> row_of(std::string_view user) const {
    auto it = user_index_.find(user);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<Index> column_of(Domain d, std::string_view item) const {
    const auto& v = items(d);
    auto it = std::lower_bound(v.begin(), v.end(), item,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == v.end() || *it != item) return std::nullopt;
    return columns(d).begin + (it - v.begin());
  }

  // Must be called after `users` is assigned.
  void index_users() {
    user_index_.clear();
    for (std::size_t r = 0; r < users.size(); ++r) {
      if (!user_index_.emplace(users[r], static_cast<Index>(r)).second)
        throw DataError("duplicate user token in unified matrix: " + users[r]);
    }
  }

 private:
  std::map<std::string, Index, std::less<>> user_index_;
};

inline UnifiedMatrix build_unified(const DomainDataset& source, const DomainDataset& target,
                                   const ColdStartSplit& split) {
  UnifiedMatrix out;
  std::vector<std::string> src_only, overlap, tgt_only;
  for (const auto& u : source.users()) {
    const bool in_target = target.find_user(u).has_value();
    if (!in_target || split.is_cold_in(u, Domain::target))
      src_only.push_back(u);
    else if (!split.is_cold_in(u, Domain::source))
      overlap.push_back(u);
  }
  for (const auto& u : target.users()) {
    const bool in_source = source.find_user(u).has_value();
    if (!in_source || split.is_cold_in(u, Domain::source)) tgt_only.push_back(u);
  }
  for (const auto& u : split.cold_source_eval)
    if (!source.find_user(u) || !target.find_user(u))
      throw DataError("split user '" + u + "' is not an overlapping user");
  for (const auto& u : split.cold_target_eval)
    if (!source.find_user(u) || !target.find_user(u))
      throw DataError("split user '" + u + "' is not an overlapping user");
  // src_only/overlap follow source.users() order and tgt_only target.users()
  // order, but cold users are merged in, so re-sort each block.
  std::sort(src_only.begin(), src_only.end());
  std::sort(overlap.begin(), overlap.end());
  std::sort(tgt_only.begin(), tgt_only.end());

  const Index n1 = static_cast<Index>(src_only.size());
  const Index n2 = static_cast<Index>(overlap.size());
  const Index n3 = static_cast<Index>(tgt_only.size());
  out.row_blocks = {IndexRange{0, n1}, IndexRange{n1, n1 + n2}, IndexRange{n1 + n2, n1 + n2 + n3}};
  out.users.reserve(static_cast<std::size_t>(n1 + n2 + n3));
  out.users.insert(out.users.end(), src_only.begin(), src_only.end());
  out.users.insert(out.users.end(), overlap.begin(), overlap.end());
  out.users.insert(out.users.end(), tgt_only.begin(), tgt_only.end());
  out.index_users();
  out.source_items = source.items();
  out.target_items = target.items();
  const Index ns = static_cast<Index>(source.items().size());
  const Index nt = static_cast<Index>(target.items().size());
  out.source_cols = {0, ns};
  out.target_cols = {ns, ns + nt};

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(source.num_interactions() + target.num_interactions());
  auto emit = [&](const DomainDataset& ds, Index col_offset, Domain masked_if_cold_in) {
    for (std::size_t u = 0; u < ds.users().size(); ++u) {
      const auto& token = ds.users()[u];
      if (split.is_cold_in(token, masked_if_cold_in)) continue;
      const auto row = *out.row_of(token);
      for (int item : ds.items_of(u)) triplets.emplace_back(row, col_offset + item, 1.0);
    }
  };
  emit(source, 0, Domain::source);
  emit(target, ns, Domain::target);
  out.matrix.resize(n1 + n2 + n3, ns + nt);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

}  // namespace cdrflow
