#pragma once

// Leave-one-out cold-start evaluation: one held-out positive ranked against
// sampled negatives, aggregated into HR@k and NDCG@k per direction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/pipeline.hpp"
#include "cdrflow/random.hpp"

namespace cdrflow {

enum class TiePolicy { pessimistic };

struct EvalProtocol {
  int k = 10;
  int num_negatives = 999;
  std::uint64_t seed = 0;
  TiePolicy tie_policy = TiePolicy::pessimistic;

  void validate() const {
    if (k < 1) throw UsageError("k must be at least 1");
    if (num_negatives < k) throw UsageError("num_negatives must be at least k");
  }
};

// source_to_target: users who keep their source data are scored on target items.
enum class Direction { source_to_target, target_to_source };

inline std::string_view to_string(Direction d) {
  return d == Direction::source_to_target ? "source_to_target" : "target_to_source";
}

inline Domain cold_domain(Direction d) { return d == Direction::source_to_target ? Domain::target : Domain::source; }

struct UserRank {
  std::string user;
  int rank = 0;
};

struct EvalReport {
  Direction direction = Direction::source_to_target;
  int k = 10;
  int num_negatives = 999;
  double hr_at_k = 0.0;
  double ndcg_at_k = 0.0;
  std::vector<UserRank> per_user;  // sorted by user token
  std::vector<std::string> skipped_users;
};

// Raised when a user's candidate pool cannot supply n negatives.
class EvaluationInfeasible : public DataError {
 public:
  using DataError::DataError;
};

// n distinct items of `domain` the user never interacted with in the unmasked
// data, drawn uniformly without replacement from a stream seeded by
// (seed, user, domain).
inline std::vector<std::string> sample_negatives(std::string_view user, Domain domain, const DomainDataset& original,
                                                 int n, std::uint64_t seed) {
  std::vector<int> pool;
  pool.reserve(original.items().size());
  const auto u = original.find_user(user);
  for (int i = 0; i < static_cast<int>(original.items().size()); ++i)
    if (!u || !original.has_interaction(*u, i)) pool.push_back(i);
  if (n < 0 || static_cast<std::size_t>(n) > pool.size())
    throw EvaluationInfeasible("user '" + std::string(user) + "' has " + std::to_string(pool.size()) +
                               " candidate negatives in the " + std::string(to_string(domain)) + " domain, " +
                               std::to_string(n) + " required");
  Rng rng(derive_seed(seed, user, to_string(domain)));
  const auto count = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(original.items()[static_cast<std::size_t>(pool[i])]);
  return out;
}

// 1 + number of negatives scoring at least as high as the positive.
inline int rank_positive(double positive_score, std::span<const double> negative_scores,
                         TiePolicy = TiePolicy::pessimistic) {
  int rank = 1;
  for (double s : negative_scores)
    if (s >= positive_score) ++rank;
  return rank;
}

inline double ndcg_contribution(int rank, int k) {
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

// Metrics from per-user ranks, summed in user-token order.
inline void aggregate(EvalReport& report) {
  std::sort(report.per_user.begin(), report.per_user.end(),
            [](const UserRank& a, const UserRank& b) { return a.user < b.user; });
  std::sort(report.skipped_users.begin(), report.skipped_users.end());
  double hits = 0.0, gain = 0.0;
  for (const auto& r : report.per_user) {
    if (r.rank <= report.k) hits += 1.0;
    gain += ndcg_contribution(r.rank, report.k);
  }
  const double n = static_cast<double>(report.per_user.size());
  report.hr_at_k = n > 0 ? hits / n : 0.0;
  report.ndcg_at_k = n > 0 ? gain / n : 0.0;
}

// Evaluates both directions with an arbitrary scorer
// `double(const std::string& user, Domain, const std::string& item)`.
template <class Scorer>
std::array<EvalReport, 2> evaluate_with(Scorer&& score, const ColdStartSplit& split, const DomainDataset& source,
                                        const DomainDataset& target, const EvalProtocol& protocol) {
  protocol.validate();
  std::array<EvalReport, 2> reports;
  for (const Direction dir : {Direction::source_to_target, Direction::target_to_source}) {
    EvalReport& rep = reports[dir == Direction::source_to_target ? 0 : 1];
    rep.direction = dir;
    rep.k = protocol.k;
    rep.num_negatives = protocol.num_negatives;
    const Domain domain = cold_domain(dir);
    const DomainDataset& original = domain == Domain::source ? source : target;
    for (const auto& user : split.cold_users(domain)) {
      const auto pos = split.heldout_positive.find(user);
      if (pos == split.heldout_positive.end())
        throw DataError("split has no held-out positive for cold user '" + user + "'");
      std::vector<std::string> negatives;
      try {
        negatives = sample_negatives(user, domain, original, protocol.num_negatives, protocol.seed);
      } catch (const EvaluationInfeasible&) {
        rep.skipped_users.push_back(user);
        continue;
      }
      const double positive_score = score(user, domain, pos->second);
      std::vector<double> neg_scores;
      neg_scores.reserve(negatives.size());
      for (const auto& item : negatives) neg_scores.push_back(score(user, domain, item));
      rep.per_user.push_back({user, rank_positive(positive_score, neg_scores, protocol.tie_policy)});
    }
    aggregate(rep);
  }
  return reports;
}

// Scores read from R-hat.
inline std::array<EvalReport, 2> evaluate(const InferenceResult& result, const ColdStartSplit& split,
                                          const DomainDataset& source, const DomainDataset& target,
                                          const EvalProtocol& protocol) {
  if (!result.input) throw UsageError("inference result carries no input matrix");
  const UnifiedMatrix& r = *result.input;
  auto scorer = [&](const std::string& user, Domain domain, const std::string& item) {
    const auto row = r.row_of(user);
    if (!row) throw DataError("unknown user '" + user + "'");
    const auto col = r.column_of(domain, item);
    if (!col) throw DataError("unknown " + std::string(to_string(domain)) + " item '" + item + "'");
    return result.r_hat(*row, *col);
  };
  return evaluate_with(scorer, split, source, target, protocol);
}

struct Variant {
  std::string name;
  ProcessConfig config;
};

// full, the four component ablations, and the two single-domain item graphs.
inline std::vector<Variant> ablation_variants(const ProcessConfig& base) {
  std::vector<Variant> out;
  auto with = [&](std::string name, auto&& edit) {
    ProcessConfig c = base;
    c.ablation = Ablation{};
    c.graph_scope = GraphScope::cross;
    edit(c);
    out.push_back({std::move(name), c});
  };
  with("full", [](ProcessConfig&) {});
  with("no_heat", [](ProcessConfig& c) { c.ablation.no_heat = true; });
  with("no_ideal", [](ProcessConfig& c) { c.ablation.no_ideal = true; });
  with("no_smooth", [](ProcessConfig& c) { c.ablation.no_smooth = true; });
  with("no_sharpen", [](ProcessConfig& c) { c.ablation.no_sharpen = true; });
  with("source_only_graph", [](ProcessConfig& c) { c.graph_scope = GraphScope::source_only; });
  with("target_only_graph", [](ProcessConfig& c) { c.graph_scope = GraphScope::target_only; });
  return out;
}

struct AblationRow {
  std::string variant;
  Direction direction = Direction::source_to_target;
  std::optional<EvalReport> report;
  std::string error;  // set when the variant failed
};

// One row per (variant, direction). A failing variant is recorded, not fatal.
inline std::vector<AblationRow> run_ablation_suite(const UnifiedMatrix& r, const ProcessConfig& base,
                                                   const ColdStartSplit& split, const DomainDataset& source,
                                                   const DomainDataset& target, const EvalProtocol& protocol) {
  std::vector<AblationRow> rows;
  // Every variant shares the SVD settings, so the factorization is computed once.
  std::optional<SvdResult> svd;
  if (base.beta != 0.0) {
    try {
      svd = truncated_svd(base.svd_on_normalized ? normalize(r).matrix : r.matrix, base.svd_rank, base.seed);
    } catch (const Error&) {
      svd.reset();  // each variant reports its own failure below
    }
  }
  for (const auto& v : ablation_variants(base)) {
    try {
      const auto result = run_pipeline(r, v.config, svd);
      const auto reports = evaluate(result, split, source, target, protocol);
      for (const auto& rep : reports) rows.push_back({v.name, rep.direction, rep, {}});
    } catch (const Error& e) {
      for (const Direction d : {Direction::source_to_target, Direction::target_to_source})
        rows.push_back({v.name, d, std::nullopt, e.what()});
    }
  }
  return rows;
}

}  // namespace cdrflow
