#pragma once

// Batch front end: prepare, run, evaluate, ablate, sweep, synth.
// Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cdrflow.hpp"

namespace cdrflow::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Files written by `prepare` and read by every later command.
struct PreparedData {
  UnifiedMatrix matrix;
  ColdStartSplit split;
  DomainDataset source;
  DomainDataset target;
};

inline PreparedData load_prepared(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("prepared data directory not found: " + dir.string());
  PreparedData d;
  d.matrix = io::load_unified(dir / "matrix");
  d.split = io::load_split(dir / "split.txt");
  d.source = load_domain((dir / "source.dataset.tsv").string(), Domain::source, 1.0, 1);
  d.target = load_domain((dir / "target.dataset.tsv").string(), Domain::target, 1.0, 1);
  return d;
}

inline void write_text(const fs::path& p, const std::string& text) {
  auto out = io::open_out(p);
  out << text;
}

inline std::string manifest_text(const std::string& command, const std::vector<std::pair<std::string, std::string>>& inputs,
                                 const RunSettings& settings) {
  std::ostringstream out;
  out << "# cdrflow run manifest; loadable with --config\n";
  out << "# command: " << command << '\n';
  for (const auto& [k, v] : inputs) out << "# " << k << ": " << v << '\n';
  out << "# solver_b=" << ode::to_string(settings.process.solver_b)
      << " solver_h=" << ode::to_string(settings.process.solver_h) << '\n';
  out << to_config_text(settings);
  return out.str();
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline void write_eval_outputs(const fs::path& out, const std::array<EvalReport, 2>& reports) {
  std::ostringstream csv, record, summary;
  csv << "direction,k,hr,ndcg,evaluated,skipped\n";
  summary << std::left << std::setw(18) << "direction" << std::right << std::setw(10) << "HR@k" << std::setw(10)
          << "NDCG@k" << std::setw(11) << "evaluated" << std::setw(9) << "skipped" << '\n';
  for (const auto& r : reports) {
    const auto dir = std::string(to_string(r.direction));
    csv << dir << ',' << r.k << ',' << io::format_double(r.hr_at_k) << ',' << io::format_double(r.ndcg_at_k) << ','
        << r.per_user.size() << ',' << r.skipped_users.size() << '\n';
    const auto k = std::to_string(r.k);
    record << dir << ".hr@" << k << " = " << io::format_double(r.hr_at_k) << '\n'
           << dir << ".ndcg@" << k << " = " << io::format_double(r.ndcg_at_k) << '\n'
           << dir << ".evaluated = " << r.per_user.size() << '\n'
           << dir << ".skipped = " << r.skipped_users.size() << '\n';
    summary << std::left << std::setw(18) << dir << std::right << std::setw(10) << fixed(r.hr_at_k) << std::setw(10)
            << fixed(r.ndcg_at_k) << std::setw(11) << r.per_user.size() << std::setw(9) << r.skipped_users.size()
            << '\n';
    std::ostringstream ranks;
    ranks << "user,rank\n";
    for (const auto& u : r.per_user) ranks << u.user << ',' << u.rank << '\n';
    write_text(out / ("ranks_" + dir + ".csv"), ranks.str());
  }
  write_text(out / "metrics.csv", csv.str());
  write_text(out / "metrics.txt", record.str());
  write_text(out / "summary.txt", summary.str());
}

inline void write_timings(const fs::path& out, const Timings& t) {
  std::ostringstream s;
  s << "preprocessing_seconds = " << fixed(t.preprocessing, 6) << '\n'
    << "svd_seconds = " << fixed(t.svd, 6) << '\n'
    << "smoothing_seconds = " << fixed(t.smoothing, 6) << '\n'
    << "sharpening_seconds = " << fixed(t.sharpening, 6) << '\n';
  write_text(out / "timings.txt", s.str());
}

// Column order of the comparison table: the four component ablations, the
// single-domain item graphs, then the full model.
inline const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols = {"no_heat",           "no_ideal",          "no_smooth", "no_sharpen",
                                                "source_only_graph", "target_only_graph", "full"};
  return cols;
}

inline void write_ablation_outputs(const fs::path& out, const std::vector<AblationRow>& rows) {
  std::ostringstream lng, wide, summary;
  lng << "variant,direction,hr,ndcg,evaluated,skipped,error\n";
  std::map<std::pair<std::string, std::string>, const AblationRow*> by_key;
  for (const auto& r : rows) {
    const auto dir = std::string(to_string(r.direction));
    by_key[{r.variant, dir}] = &r;
    lng << r.variant << ',' << dir << ',';
    if (r.report)
      lng << io::format_double(r.report->hr_at_k) << ',' << io::format_double(r.report->ndcg_at_k) << ','
          << r.report->per_user.size() << ',' << r.report->skipped_users.size() << ",\n";
    else
      lng << ",,,,\"" << r.error << "\"\n";
  }
  wide << "direction,metric";
  summary << std::left << std::setw(18) << "direction" << std::setw(6) << "metric";
  for (const auto& c : table_columns()) {
    wide << ',' << c;
    summary << std::right << std::setw(19) << c;
  }
  wide << '\n';
  summary << '\n';
  for (const Direction d : {Direction::source_to_target, Direction::target_to_source}) {
    const auto dir = std::string(to_string(d));
    for (const bool hr : {true, false}) {
      wide << dir << ',' << (hr ? "HR" : "NDCG");
      summary << std::left << std::setw(18) << dir << std::setw(6) << (hr ? "HR" : "NDCG");
      for (const auto& c : table_columns()) {
        const auto it = by_key.find({c, dir});
        std::string cell, pretty = "error";
        if (it != by_key.end() && it->second->report) {
          const double v = hr ? it->second->report->hr_at_k : it->second->report->ndcg_at_k;
          cell = io::format_double(v);
          pretty = fixed(v);
        }
        wide << ',' << cell;
        summary << std::right << std::setw(19) << pretty;
      }
      wide << '\n';
      summary << '\n';
    }
  }
  write_text(out / "ablation.csv", lng.str());
  write_text(out / "ablation_table.csv", wide.str());
  write_text(out / "summary.txt", summary.str());
}

// "key=lo:hi:step" or "key=v1,v2,..."; values are returned as config text.
inline std::pair<std::string, std::vector<std::string>> parse_grid(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("grid spec must look like key=lo:hi:step or key=a,b,c");
  const std::string key = spec.substr(0, eq);
  const std::string body = spec.substr(eq + 1);
  std::vector<std::string> values;
  if (body.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
      const auto v = cdrflow::detail::parse_real(cdrflow::detail::trim(tok));
      if (!v) throw UsageError("bad number '" + tok + "' in grid spec " + spec);
      parts.push_back(*v);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
      throw UsageError("range grid needs lo:hi:step with step > 0 and hi >= lo: " + spec);
    const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) {
      const double v = std::round((parts[0] + static_cast<double>(i) * parts[2]) * 1e9) / 1e9;
      values.push_back(io::format_double(v));
    }
  } else {
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto t = cdrflow::detail::trim(tok);
      if (!t.empty()) values.emplace_back(t);
    }
  }
  if (values.empty()) throw UsageError("grid spec has no values: " + spec);
  return {key, values};
}

// Sweep ranges used when no --grid is given for a named preset.
inline std::string preset_grid(const std::string& name) {
  if (name == "alpha" || name == "beta") return name + "=0.1:1.0:0.1";
  if (name == "tb" || name == "th") return name + "=1.0:3.0:0.2";
  if (name == "steps_b" || name == "steps_h") return name + "=1,2,3,4,5";
  throw UsageError("unknown sweep preset '" + name + "' (alpha, beta, tb, th, steps_b, steps_h)");
}

// Flags shared by the commands that run the pipeline.
struct PipelineFlags {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> alpha, beta, k, tb, th;
  std::optional<int> steps_b, steps_h, eval_k, negatives;
  std::optional<std::string> solver_b, solver_h, ablate, graph_scope;
  std::optional<Index> svd_rank;
  std::string svd_cache;

  void attach(CLI::App* cmd, bool needs_data = true) {
    cmd->add_option("--config", config, "key = value config file");
    auto* d = cmd->add_option("--data", data, "directory written by `prepare`");
    if (needs_data) d->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--seed", seed, "seed for the SVD and negative sampling");
    cmd->add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", alpha, "heat-equation weight");
    cmd->add_option("--beta", beta, "low-pass weight");
    cmd->add_option("--heat-capacity", k, "heat capacity k");
    cmd->add_option("--tb", tb, "smoothing terminal time");
    cmd->add_option("--th", th, "sharpening terminal time");
    cmd->add_option("--steps-b", steps_b, "smoothing steps");
    cmd->add_option("--steps-h", steps_h, "sharpening steps");
    cmd->add_option("--solver-b", solver_b, "smoothing solver: euler, rk4, adams_moulton");
    cmd->add_option("--solver-h", solver_h, "sharpening solver: euler, rk4, adams_moulton");
    cmd->add_option("--svd-rank", svd_rank, "rank of the low-pass projector");
    cmd->add_option("--ablate", ablate, "comma list of no_heat,no_ideal,no_smooth,no_sharpen");
    cmd->add_option("--graph-scope", graph_scope, "cross, source_only or target_only");
    cmd->add_option("--k", eval_k, "cutoff for HR@k and NDCG@k");
    cmd->add_option("--negatives", negatives, "sampled negatives per held-out positive");
    cmd->add_option("--svd-cache", svd_cache, "directory for cached singular vectors");
  }

  // Defaults, then the config file, then flags.
  RunSettings resolve() const {
    RunSettings s;
    if (!config.empty()) s = load_config_file(config, s);
    auto& p = s.process;
    if (seed) {
      p.seed = *seed;
      s.protocol.seed = *seed;
    }
    if (alpha) p.alpha = *alpha;
    if (beta) p.beta = *beta;
    if (k) p.k = *k;
    if (tb) p.tb = *tb;
    if (th) p.th = *th;
    if (steps_b) p.steps_b = *steps_b;
    if (steps_h) p.steps_h = *steps_h;
    if (solver_b) p.solver_b = ode::parse_method(*solver_b);
    if (solver_h) p.solver_h = ode::parse_method(*solver_h);
    if (svd_rank) p.svd_rank = *svd_rank;
    if (ablate) p.ablation = parse_ablation(*ablate);
    if (graph_scope) p.graph_scope = parse_graph_scope(*graph_scope);
    if (eval_k) s.protocol.k = *eval_k;
    if (negatives) s.protocol.num_negatives = *negatives;
    p = p.resolved();
    p.validate();
    s.protocol.validate();
    return s;
  }

  void apply_runtime(const RunSettings& s) const {
    parallel::set_num_threads(threads);
    parallel::set_block_rows(s.block_rows);
  }
};

// Singular vectors for this run, read from or written to --svd-cache.
inline std::optional<SvdResult> cached_svd(const PipelineFlags& f, const UnifiedMatrix& m, const ProcessConfig& p) {
  if (f.svd_cache.empty() || p.effective_beta() == 0.0) return std::nullopt;
  const SparseMatrix input = p.svd_on_normalized ? normalize(m).matrix : m.matrix;
  const io::SvdCacheKey key{matrix_fingerprint(input), p.svd_rank, p.seed};
  const fs::path path = fs::path(f.svd_cache) / io::svd_cache_name(key);
  if (fs::exists(path))
    if (auto hit = io::load_svd(path, key)) return hit;
  fs::create_directories(f.svd_cache);
  auto svd = truncated_svd(input, p.svd_rank, p.seed);
  io::save_svd(svd, key, path);
  return svd;
}

inline void warn_svd(const InferenceResult& r) {
  if (r.svd && r.svd->rank_clamped)
    std::cerr << "warning: svd_rank " << r.svd->requested_rank << " exceeds the numerical rank; using "
              << r.svd->rank << '\n';
}

inline void warn_skipped(const std::array<EvalReport, 2>& reports) {
  for (const auto& r : reports)
    if (!r.skipped_users.empty())
      std::cerr << "warning: " << to_string(r.direction) << ": skipped " << r.skipped_users.size()
                << " users whose candidate pool is smaller than " << r.num_negatives << '\n';
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"cdrflow: training-free cross-domain recommendation for cold-start users"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "ingest rating files, simulate cold-start users, build the unified matrix");
  std::string src_file, tgt_file, prep_out;
  std::uint64_t split_seed = 0;
  double fraction = 0.2, threshold = 4.0;
  int min_interactions = 5;
  prepare->add_option("--source", src_file, "source-domain rating file")->required();
  prepare->add_option("--target", tgt_file, "target-domain rating file")->required();
  prepare->add_option("--out", prep_out, "output directory")->required();
  prepare->add_option("--seed", split_seed, "split seed");
  prepare->add_option("--fraction", fraction, "share of overlapping users made cold-start");
  prepare->add_option("--threshold", threshold, "ratings >= threshold are positives");
  prepare->add_option("--min-interactions", min_interactions, "minimum positives per user");
  int prep_threads = 1;
  prepare->add_option("--threads", prep_threads, "accepted for symmetry; preparation is single-threaded");

  PipelineFlags run_flags, eval_flags, ablate_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "run smoothing and sharpening, report timings");
  run_flags.attach(run);
  bool dump_rhat = false;
  run->add_flag("--dump-rhat", dump_rhat, "write the inferred matrix to rhat.bin");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "leave-one-out HR@k / NDCG@k for the simulated cold-start users");
  eval_flags.attach(evaluate_cmd);
  std::string rhat_path;
  evaluate_cmd->add_option("--rhat", rhat_path, "score a saved rhat.bin instead of running the pipeline");

  auto* ablate_cmd = app.add_subcommand("ablate", "compare the full model with its ablations and single-domain graphs");
  ablate_flags.attach(ablate_cmd);

  auto* sweep = app.add_subcommand("sweep", "grid over hyper-parameters, one metric row per point and direction");
  sweep_flags.attach(sweep);
  std::vector<std::string> grids, presets;
  sweep->add_option("--grid", grids, "key=lo:hi:step or key=a,b,c (repeatable; cartesian product)");
  sweep->add_option("--preset", presets, "standard range for alpha, beta, tb, th, steps_b or steps_h");

  auto* synth = app.add_subcommand("synth", "generate a synthetic cross-domain dataset");
  SynthSpec spec = SynthSpec::synth_b();
  std::string synth_out, preset = "synth-B";
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--preset", preset, "base specification (synth-B)");
  std::optional<int> s_users, s_overlap, s_items, s_comm;
  std::optional<double> s_pin, s_pout;
  std::optional<std::uint64_t> s_seed;
  synth->add_option("--users", s_users);
  synth->add_option("--overlap", s_overlap);
  synth->add_option("--items", s_items, "items per domain");
  synth->add_option("--communities", s_comm);
  synth->add_option("--p-in", s_pin);
  synth->add_option("--p-out", s_pout);
  synth->add_option("--seed", s_seed);
  int synth_threads = 1;
  synth->add_option("--threads", synth_threads, "accepted for symmetry; generation is single-threaded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prepare) {
      auto source = load_domain(src_file, Domain::source, threshold, min_interactions);
      auto target = load_domain(tgt_file, Domain::target, threshold, min_interactions);
      const auto split = make_split(source, target, fraction, split_seed);
      const auto matrix = build_unified(source, target, split);
      const fs::path out(prep_out);
      fs::create_directories(out);
      io::save_unified(matrix, out / "matrix");
      io::save_split(split, out / "split.txt");
      io::write_ratings(out / "source.dataset.tsv", source, "1");
      io::write_ratings(out / "target.dataset.tsv", target, "1");
      std::ostringstream m;
      m << "# cdrflow prepare manifest\ncommand = prepare\nsource = " << src_file << "\ntarget = " << tgt_file
        << "\nseed = " << split_seed << "\nfraction = " << io::format_double(fraction)
        << "\nthreshold = " << io::format_double(threshold) << "\nmin_interactions = " << min_interactions << '\n';
      write_text(out / "manifest.txt", m.str());
      std::cout << "prepared " << matrix.rows() << " x " << matrix.cols() << " matrix with " << matrix.matrix.nonZeros()
                << " interactions; cold users: " << split.cold_source_eval.size() << " (source->target), "
                << split.cold_target_eval.size() << " (target->source)\n";
      return kOk;
    }

    if (*run) {
      const auto settings = run_flags.resolve();
      run_flags.apply_runtime(settings);
      const auto data = load_prepared(run_flags.data);
      const fs::path out(run_flags.out);
      fs::create_directories(out);
      write_text(out / "manifest.txt", manifest_text("run", {{"data", run_flags.data}}, settings));
      const auto result = run_pipeline(data.matrix, settings.process, cached_svd(run_flags, data.matrix, settings.process));
      warn_svd(result);
      write_timings(out, result.timings);
      if (dump_rhat) io::save_dense(result.r_hat, out / "rhat.bin");
      std::cout << "solver_b=" << ode::to_string(settings.process.solver_b)
                << " solver_h=" << ode::to_string(settings.process.solver_h) << '\n'
                << "inferred " << result.r_hat.rows() << " x " << result.r_hat.cols() << " matrix in "
                << fixed(result.timings.preprocessing + result.timings.svd + result.timings.smoothing +
                             result.timings.sharpening, 3)
                << " s\n";
      return kOk;
    }

    if (*evaluate_cmd) {
      const auto settings = eval_flags.resolve();
      eval_flags.apply_runtime(settings);
      const auto data = load_prepared(eval_flags.data);
      const fs::path out(eval_flags.out);
      fs::create_directories(out);
      write_text(out / "manifest.txt",
                 manifest_text("evaluate", {{"data", eval_flags.data}, {"rhat", rhat_path}}, settings));
      InferenceResult result;
      if (!rhat_path.empty()) {
        result.r_hat = io::load_dense(rhat_path);
        if (result.r_hat.rows() != data.matrix.rows() || result.r_hat.cols() != data.matrix.cols())
          throw DataError(rhat_path + ": shape does not match the prepared matrix");
        result.config = settings.process;
        result.input = std::make_shared<const UnifiedMatrix>(data.matrix);
      } else {
        result = run_pipeline(data.matrix, settings.process, cached_svd(eval_flags, data.matrix, settings.process));
        warn_svd(result);
        write_timings(out, result.timings);
      }
      const auto reports = evaluate(result, data.split, data.source, data.target, settings.protocol);
      warn_skipped(reports);
      write_eval_outputs(out, reports);
      std::cout << io::read_file(out / "summary.txt");
      return kOk;
    }

    if (*ablate_cmd) {
      const auto settings = ablate_flags.resolve();
      ablate_flags.apply_runtime(settings);
      const auto data = load_prepared(ablate_flags.data);
      const fs::path out(ablate_flags.out);
      fs::create_directories(out);
      write_text(out / "manifest.txt", manifest_text("ablate", {{"data", ablate_flags.data}}, settings));
      const auto rows =
          run_ablation_suite(data.matrix, settings.process, data.split, data.source, data.target, settings.protocol);
      write_ablation_outputs(out, rows);
      std::cout << io::read_file(out / "summary.txt");
      return kOk;
    }

    if (*sweep) {
      const auto base = sweep_flags.resolve();
      sweep_flags.apply_runtime(base);
      std::vector<std::pair<std::string, std::vector<std::string>>> axes;
      for (const auto& p : presets) axes.push_back(parse_grid(preset_grid(p)));
      for (const auto& g : grids) axes.push_back(parse_grid(g));
      if (axes.empty()) throw UsageError("sweep needs at least one --grid or --preset");
      const auto data = load_prepared(sweep_flags.data);
      const fs::path out(sweep_flags.out);
      fs::create_directories(out);
      std::vector<std::pair<std::string, std::string>> inputs{{"data", sweep_flags.data}};
      for (const auto& [key, values] : axes) {
        std::string joined;
        for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
        inputs.emplace_back("grid " + key, joined);
      }
      write_text(out / "manifest.txt", manifest_text("sweep", inputs, base));

      // SVD settings are fixed across the grid unless swept explicitly.
      std::map<std::tuple<bool, Index, std::uint64_t>, std::optional<SvdResult>> svd_memo;
      std::ostringstream csv;
      csv << "alpha,beta,tb,steps_b,th,steps_h,direction,hr,ndcg,evaluated,skipped,error\n";
      std::vector<std::size_t> idx(axes.size(), 0);
      std::size_t points = 0;
      for (;;) {
        RunSettings s = base;
        for (std::size_t a = 0; a < axes.size(); ++a) apply_setting(s, axes[a].first, axes[a].second[idx[a]]);
        s.process = s.process.resolved();
        const auto& p = s.process;
        const std::string prefix = io::format_double(p.alpha) + ',' + io::format_double(p.beta) + ',' +
                                   io::format_double(p.tb) + ',' + std::to_string(p.steps_b) + ',' +
                                   io::format_double(p.th) + ',' + std::to_string(p.steps_h) + ',';
        try {
          p.validate();
          std::optional<SvdResult> svd;
          if (p.effective_beta() != 0.0) {
            auto& slot = svd_memo[{p.svd_on_normalized, p.svd_rank, p.seed}];
            if (!slot) slot = truncated_svd(p.svd_on_normalized ? normalize(data.matrix).matrix : data.matrix.matrix,
                                            p.svd_rank, p.seed);
            svd = slot;
          }
          const auto result = run_pipeline(data.matrix, p, svd);
          const auto reports = evaluate(result, data.split, data.source, data.target, s.protocol);
          for (const auto& r : reports)
            csv << prefix << to_string(r.direction) << ',' << io::format_double(r.hr_at_k) << ','
                << io::format_double(r.ndcg_at_k) << ',' << r.per_user.size() << ',' << r.skipped_users.size()
                << ",\n";
        } catch (const Error& e) {
          for (const Direction d : {Direction::source_to_target, Direction::target_to_source})
            csv << prefix << to_string(d) << ",,,,,\"" << e.what() << "\"\n";
        }
        ++points;
        bool done = true;
        for (std::size_t a = axes.size(); a-- > 0;) {
          if (++idx[a] < axes[a].second.size()) {
            done = false;
            break;
          }
          idx[a] = 0;
        }
        if (done) break;
      }
      write_text(out / "sweep.csv", csv.str());
      std::cout << "swept " << points << " grid points\n";
      return kOk;
    }

    if (*synth) {
      if (preset != "synth-B") throw UsageError("unknown synthetic preset '" + preset + "'");
      if (s_users) spec.num_users = *s_users;
      if (s_overlap) spec.num_overlap = *s_overlap;
      if (s_items) spec.items_per_domain = *s_items;
      if (s_comm) spec.num_communities = *s_comm;
      if (s_pin) spec.p_in = *s_pin;
      if (s_pout) spec.p_out = *s_pout;
      if (s_seed) spec.seed = *s_seed;
      const auto data = generate(spec);
      const fs::path out(synth_out);
      fs::create_directories(out);
      io::write_ratings(out / "source.tsv", data.source, "5");
      io::write_ratings(out / "target.tsv", data.target, "5");
      std::ostringstream comm;
      comm << "user,community\n";
      for (const auto& [u, c] : data.communities) comm << u << ',' << c << '\n';
      write_text(out / "communities.csv", comm.str());
      std::ostringstream m;
      m << "# cdrflow synth manifest\ncommand = synth\npreset = " << preset << "\nusers = " << spec.num_users
        << "\noverlap = " << spec.num_overlap << "\nitems_per_domain = " << spec.items_per_domain
        << "\ncommunities = " << spec.num_communities << "\np_in = " << io::format_double(spec.p_in)
        << "\np_out = " << io::format_double(spec.p_out) << "\ncold_fraction = " << io::format_double(spec.cold_fraction)
        << "\nseed = " << spec.seed << '\n';
      write_text(out / "manifest.txt", m.str());
      std::cout << "wrote " << data.source.num_interactions() << " source and " << data.target.num_interactions()
                << " target interactions to " << out.string() << '\n';
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace cdrflow::cli
