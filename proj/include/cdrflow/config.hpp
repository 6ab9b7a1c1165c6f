#pragma once

// Flat `key = value` run configuration. '#' starts a comment. The same keys
// are written back by to_config_text, so a manifest reloads to the same run.
//
//   alpha beta k tb steps_b solver_b th steps_h solver_h svd_rank
//   svd_on_normalized strict_combination b0_normalized graph_scope ablation
//   seed am_tolerance am_max_iters eval_k num_negatives eval_seed block_rows

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "cdrflow/errors.hpp"
#include "cdrflow/evaluation.hpp"
#include "cdrflow/io.hpp"
#include "cdrflow/pipeline.hpp"

namespace cdrflow {

struct RunSettings {
  ProcessConfig process;
  EvalProtocol protocol;
  Index block_rows = 64;
};

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw UsageError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

}  // namespace detail

inline void apply_setting(RunSettings& s, std::string_view key, std::string_view value) {
  using detail::parse_bool;
  using detail::parse_number;
  auto& p = s.process;
  if (key == "alpha") p.alpha = parse_number<double>(key, value);
  else if (key == "beta") p.beta = parse_number<double>(key, value);
  else if (key == "k") p.k = parse_number<double>(key, value);
  else if (key == "tb") p.tb = parse_number<double>(key, value);
  else if (key == "steps_b") p.steps_b = parse_number<int>(key, value);
  else if (key == "solver_b") p.solver_b = ode::parse_method(value);
  else if (key == "th") p.th = parse_number<double>(key, value);
  else if (key == "steps_h") p.steps_h = parse_number<int>(key, value);
  else if (key == "solver_h") p.solver_h = ode::parse_method(value);
  else if (key == "svd_rank") p.svd_rank = parse_number<Index>(key, value);
  else if (key == "svd_on_normalized") p.svd_on_normalized = parse_bool(key, value);
  else if (key == "strict_combination") p.strict_combination = parse_bool(key, value);
  else if (key == "b0_normalized") p.b0_normalized = parse_bool(key, value);
  else if (key == "graph_scope") p.graph_scope = parse_graph_scope(value);
  else if (key == "ablation") p.ablation = parse_ablation(value);
  else if (key == "seed") p.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "am_tolerance") p.am_tolerance = parse_number<double>(key, value);
  else if (key == "am_max_iters") p.am_max_iters = parse_number<int>(key, value);
  else if (key == "eval_k") s.protocol.k = parse_number<int>(key, value);
  else if (key == "num_negatives") s.protocol.num_negatives = parse_number<int>(key, value);
  else if (key == "eval_seed") s.protocol.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "block_rows") s.block_rows = parse_number<Index>(key, value);
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

inline void apply_config_text(RunSettings& s, std::string_view text, const std::string& origin = "<config>") {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw UsageError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const auto key = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      try {
        apply_setting(s, key, value);
      } catch (const UsageError& e) {
        throw UsageError(origin + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

inline RunSettings load_config_file(const std::filesystem::path& path, RunSettings base = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str(), path.string());
  return base;
}

inline std::string to_config_text(const RunSettings& s) {
  const auto& p = s.process;
  const auto d = io::format_double;
  std::ostringstream out;
  out << "alpha = " << d(p.alpha) << '\n'
      << "beta = " << d(p.beta) << '\n'
      << "k = " << d(p.k) << '\n'
      << "tb = " << d(p.tb) << '\n'
      << "steps_b = " << p.steps_b << '\n'
      << "solver_b = " << ode::to_string(p.solver_b) << '\n'
      << "th = " << d(p.th) << '\n'
      << "steps_h = " << p.steps_h << '\n'
      << "solver_h = " << ode::to_string(p.solver_h) << '\n'
      << "svd_rank = " << p.svd_rank << '\n'
      << "svd_on_normalized = " << (p.svd_on_normalized ? "true" : "false") << '\n'
      << "strict_combination = " << (p.strict_combination ? "true" : "false") << '\n'
      << "b0_normalized = " << (p.b0_normalized ? "true" : "false") << '\n'
      << "graph_scope = " << to_string(p.graph_scope) << '\n'
      << "ablation = " << to_string(p.ablation) << '\n'
      << "seed = " << p.seed << '\n'
      << "am_tolerance = " << d(p.am_tolerance) << '\n'
      << "am_max_iters = " << p.am_max_iters << '\n'
      << "eval_k = " << s.protocol.k << '\n'
      << "num_negatives = " << s.protocol.num_negatives << '\n'
      << "eval_seed = " << s.protocol.seed << '\n'
      << "block_rows = " << s.block_rows << '\n';
  return out.str();
}

}  // namespace cdrflow
