#pragma once

// Seeded synthetic cross-domain data with planted communities. Community c
// owns an aligned block of items in both domains, so the overlap users carry
// a real cross-domain signal.

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/random.hpp"

namespace cdrflow {

struct SynthSpec {
  int num_users = 400;
  int num_overlap = 200;
  int items_per_domain = 500;
  int num_communities = 5;
  double p_in = 0.3;
  double p_out = 0.01;
  double cold_fraction = 0.2;
  std::uint64_t seed = 7;
  int min_interactions = 5;
  int max_retries = 20;

  // The default desk-scale benchmark.
  static SynthSpec synth_b() { return {}; }

  void validate() const {
    if (num_users < 1) throw UsageError("num_users must be positive");
    if (num_overlap < 0 || num_overlap > num_users) throw UsageError("num_overlap must be in [0, num_users]");
    if (num_communities < 1 || items_per_domain < num_communities)
      throw UsageError("need at least one item per community");
    if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) throw UsageError("require 0 <= p_out < p_in <= 1");
    if (!(cold_fraction > 0.0 && cold_fraction <= 1.0)) throw UsageError("cold_fraction must be in (0, 1]");
    if (min_interactions < 0 || max_retries < 0) throw UsageError("min_interactions and max_retries must be >= 0");
  }

  // Item range [begin, end) owned by community c within one domain.
  std::pair<int, int> community_block(int c) const {
    const auto lo = static_cast<int>(static_cast<long long>(c) * items_per_domain / num_communities);
    const auto hi = static_cast<int>(static_cast<long long>(c + 1) * items_per_domain / num_communities);
    return {lo, hi};
  }
};

struct SynthData {
  DomainDataset source;
  DomainDataset target;
  std::vector<std::pair<std::string, int>> communities;  // user token -> community, by user index
};

namespace detail {
inline std::string padded(char prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05d", prefix, i);
  return buf;
}
}  // namespace detail

inline std::string synth_user_token(int i) { return detail::padded('u', i); }
inline std::string synth_item_token(Domain d, int i) { return detail::padded(d == Domain::source ? 's' : 't', i); }

// Users [0, num_overlap) appear in both domains; the rest alternate between
// source-only (even offset) and target-only (odd offset).
inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthData out;
  std::vector<std::pair<std::string, std::string>> src_pairs, tgt_pairs;
  std::vector<int> row;

  auto draw_domain = [&](int user, int community, Domain d, std::vector<std::pair<std::string, std::string>>& sink) {
    const auto [lo, hi] = spec.community_block(community);
    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
      row.clear();
      for (int j = 0; j < spec.items_per_domain; ++j) {
        const double p = (j >= lo && j < hi) ? spec.p_in : spec.p_out;
        if (bernoulli(rng, p)) row.push_back(j);
      }
      if (static_cast<int>(row.size()) >= spec.min_interactions) {
        for (int j : row) sink.emplace_back(synth_user_token(user), synth_item_token(d, j));
        return;
      }
    }
    throw DataError("synthetic generation: user " + synth_user_token(user) + " stayed below " +
                    std::to_string(spec.min_interactions) + " interactions after " +
                    std::to_string(spec.max_retries) + " retries");
  };

  for (int u = 0; u < spec.num_users; ++u) {
    const int community = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.num_communities)));
    out.communities.emplace_back(synth_user_token(u), community);
    const bool overlap = u < spec.num_overlap;
    const bool in_source = overlap || (u - spec.num_overlap) % 2 == 0;
    const bool in_target = overlap || (u - spec.num_overlap) % 2 == 1;
    if (in_source) draw_domain(u, community, Domain::source, src_pairs);
    if (in_target) draw_domain(u, community, Domain::target, tgt_pairs);
  }
  if (src_pairs.empty() || tgt_pairs.empty()) throw DataError("synthetic generation produced an empty domain");
  out.source = DomainDataset::from_token_pairs(Domain::source, src_pairs);
  out.target = DomainDataset::from_token_pairs(Domain::target, tgt_pairs);
  return out;
}

}  // namespace cdrflow
