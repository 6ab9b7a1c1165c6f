#pragma once

// Training-free inference: smooth the unified interaction matrix with the
// heat + low-pass generator, then sharpen it with the negated item graph.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/graph_ops.hpp"
#include "cdrflow/ode.hpp"

namespace cdrflow {

enum class GraphScope { cross, source_only, target_only };

inline std::string_view to_string(GraphScope s) {
  switch (s) {
    case GraphScope::cross: return "cross";
    case GraphScope::source_only: return "source_only";
    case GraphScope::target_only: return "target_only";
  }
  return "unknown";
}

inline GraphScope parse_graph_scope(std::string_view s) {
  if (s == "cross") return GraphScope::cross;
  if (s == "source_only" || s == "source") return GraphScope::source_only;
  if (s == "target_only" || s == "target") return GraphScope::target_only;
  throw UsageError("unknown graph scope '" + std::string(s) + "' (expected cross, source_only or target_only)");
}

struct Ablation {
  bool no_heat = false;
  bool no_ideal = false;
  bool no_smooth = false;
  bool no_sharpen = false;

  bool empty() const { return !no_heat && !no_ideal && !no_smooth && !no_sharpen; }
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

// Comma-separated list such as "no_heat,no_sharpen"; "none" or "" is empty.
inline Ablation parse_ablation(std::string_view s) {
  Ablation a;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto p = s.find(',', start);
    const auto tok = detail::trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (tok == "no_heat")
      a.no_heat = true;
    else if (tok == "no_ideal")
      a.no_ideal = true;
    else if (tok == "no_smooth")
      a.no_smooth = true;
    else if (tok == "no_sharpen")
      a.no_sharpen = true;
    else if (!tok.empty() && tok != "none")
      throw UsageError("unknown ablation flag '" + std::string(tok) + "'");
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return a;
}

inline std::string to_string(const Ablation& a) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(a.no_heat, "no_heat");
  add(a.no_ideal, "no_ideal");
  add(a.no_smooth, "no_smooth");
  add(a.no_sharpen, "no_sharpen");
  return out.empty() ? "none" : out;
}

struct ProcessConfig {
  double alpha = 0.3;
  double beta = 0.1;
  double k = 1.0;  // heat capacity
  double tb = 1.0;
  int steps_b = 2;
  ode::Method solver_b = ode::Method::euler;
  double th = 2.4;
  int steps_h = 1;
  ode::Method solver_h = ode::Method::rk4;
  Index svd_rank = 256;
  bool svd_on_normalized = true;
  bool strict_combination = false;
  bool b0_normalized = false;
  GraphScope graph_scope = GraphScope::cross;
  Ablation ablation;
  std::uint64_t seed = 0;
  double am_tolerance = 1e-10;
  int am_max_iters = 50;

  // no_smooth switches off both smoothing terms.
  ProcessConfig resolved() const {
    ProcessConfig c = *this;
    if (c.ablation.no_smooth) c.ablation.no_heat = c.ablation.no_ideal = true;
    return c;
  }

  double effective_alpha() const { return ablation.no_heat ? 0.0 : alpha; }
  double effective_beta() const { return ablation.no_ideal ? 0.0 : beta; }

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("alpha and beta must be non-negative");
    if (!(k > 0.0)) throw UsageError("heat capacity k must be positive");
    if (!ablation.no_smooth) {
      if (!(tb > 0.0)) throw UsageError("tb must be positive");
      if (steps_b < 1) throw UsageError("steps_b must be at least 1");
    }
    if (!ablation.no_sharpen) {
      if (!(th > 0.0)) throw UsageError("th must be positive (th = 0 is only allowed with no_sharpen)");
      if (steps_h < 1) throw UsageError("steps_h must be at least 1");
    }
    if (th < 0.0) throw UsageError("th must be non-negative");
    if (svd_rank < 1) throw UsageError("svd_rank must be at least 1");
  }
};

struct Timings {
  double preprocessing = 0.0;  // normalization and item graph
  double svd = 0.0;
  double smoothing = 0.0;
  double sharpening = 0.0;
};

struct InferenceResult {
  DenseMatrix r_hat;
  ProcessConfig config;
  Timings timings;
  std::optional<SvdResult> svd;
  std::shared_ptr<const UnifiedMatrix> input;
};

// All operators of one pipeline run.
struct PipelineOperators {
  NormalizedMatrix normalized;
  ItemOperator graph;
  std::optional<SvdResult> svd;
  std::optional<ItemOperator> low_pass;
  ItemOperator smoothing;
  ItemOperator sharpening;
};

namespace detail {

inline ItemOperator scoped_graph(const UnifiedMatrix& r, const SparseMatrix& normalized, GraphScope scope) {
  switch (scope) {
    case GraphScope::cross: return item_graph(normalized);
    case GraphScope::source_only: return single_domain_graph(normalized, r.source_cols);
    case GraphScope::target_only: return single_domain_graph(normalized, r.target_cols);
  }
  throw UsageError("bad graph scope");
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Builds the item graph, low-pass filter and both generators. `precomputed`
// skips the SVD (cache hit); it must come from the same matrix and rank.
inline PipelineOperators build_operators(const UnifiedMatrix& r, const ProcessConfig& cfg_in,
                                         Timings* timings = nullptr,
                                         const std::optional<SvdResult>& precomputed = std::nullopt) {
  const ProcessConfig cfg = cfg_in.resolved();
  cfg.validate();
  detail::Stopwatch clock;
  NormalizedMatrix norm = normalize(r);
  ItemOperator graph = detail::scoped_graph(r, norm.matrix, cfg.graph_scope);
  if (timings) timings->preprocessing = clock.lap();

  const double alpha = cfg.effective_alpha();
  const double beta = cfg.effective_beta();
  std::optional<SvdResult> svd;
  std::optional<ItemOperator> lp;
  if (beta != 0.0) {
    if (precomputed) {
      svd = precomputed;
    } else {
      svd = truncated_svd(cfg.svd_on_normalized ? norm.matrix : r.matrix, cfg.svd_rank, cfg.seed);
    }
    lp = low_pass(*svd, norm.degrees.item_degrees);
  }
  if (timings) timings->svd = clock.lap();

  ItemOperator smoothing = smoothing_generator(graph, lp, alpha, beta, cfg.k, cfg.strict_combination);
  ItemOperator sharpening = sharpening_generator(graph);
  return PipelineOperators{std::move(norm), std::move(graph), std::move(svd), std::move(lp),
                           std::move(smoothing), std::move(sharpening)};
}

inline DenseMatrix initial_state(const UnifiedMatrix& r, const PipelineOperators& ops, const ProcessConfig& cfg) {
  return DenseMatrix(cfg.b0_normalized ? ops.normalized.matrix : r.matrix);
}

// Smoothing ODE from B0 over [0, tb], then sharpening ODE over [0, th].
inline InferenceResult run_pipeline(const UnifiedMatrix& r, const ProcessConfig& config,
                                    const std::optional<SvdResult>& precomputed_svd = std::nullopt) {
  const ProcessConfig cfg = config.resolved();
  InferenceResult result;
  result.config = cfg;
  PipelineOperators ops = [&] {
    try {
      return build_operators(r, cfg, &result.timings, precomputed_svd);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("pre-processing: ") + e.what());
    }
  }();
  result.svd = ops.svd;

  detail::Stopwatch clock;
  DenseMatrix state = initial_state(r, ops, cfg);
  if (!cfg.ablation.no_smooth) {
    const ode::SolverSpec spec{cfg.solver_b, cfg.tb, cfg.steps_b, cfg.am_tolerance, cfg.am_max_iters};
    try {
      state = ode::integrate(state, ops.smoothing, spec).final_state;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("smoothing: ") + e.what());
    }
  }
  result.timings.smoothing = clock.lap();

  if (!cfg.ablation.no_sharpen) {
    const ode::SolverSpec spec{cfg.solver_h, cfg.th, cfg.steps_h, cfg.am_tolerance, cfg.am_max_iters};
    try {
      state = ode::integrate(state, ops.sharpening, spec).final_state;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("sharpening: ") + e.what());
    }
  }
  result.timings.sharpening = clock.lap();

  if (!state.allFinite()) throw NumericalError("inferred matrix contains non-finite values");
  result.r_hat = std::move(state);
  result.input = std::make_shared<const UnifiedMatrix>(r);
  return result;
}

struct ItemScore {
  std::string item;
  double score = 0.0;
};

// The user's row of R-hat restricted to one domain's items. With
// exclude_seen, items the user interacted with in the input are dropped.
inline std::vector<ItemScore> scores_for_user(const InferenceResult& result, std::string_view user, Domain domain,
                                              bool exclude_seen = false) {
  if (!result.input) throw UsageError("inference result carries no input matrix");
  const UnifiedMatrix& r = *result.input;
  const auto row = r.row_of(user);
  if (!row) throw DataError("unknown user '" + std::string(user) + "'");
  const IndexRange cols = r.columns(domain);
  const auto& names = r.items(domain);
  std::vector<ItemScore> out;
  out.reserve(static_cast<std::size_t>(cols.size()));
  for (Index j = cols.begin; j < cols.end; ++j) {
    if (exclude_seen && r.matrix.coeff(*row, j) != 0.0) continue;
    out.push_back({names[static_cast<std::size_t>(j - cols.begin)], result.r_hat(*row, j)});
  }
  return out;
}

}  // namespace cdrflow
