#pragma once

// Command-line front end. Four subcommands:
//   synth      generate a synthetic multi-session dataset directory
//   run        execute training strategies over a dataset and emit reports
//   gradcheck  finite-difference check of the network's backward passes
//   report     rebuild aggregate tables from a previous run's cells.csv
//
// Options come from flags or an INI config file (--config); flags win.
// Exit codes: 0 success, 1 job/check failures, 2 usage or config errors.
// Result files are byte-identical across reruns of the same resolved config.

#include "semg/gradcheck.hpp"
#include "semg/protocol.hpp"
#include "semg/signal_sim.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace semg::cli {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline std::string fnv1a_hex(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open for hashing: " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!is) break;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline std::vector<int> iota1(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i + 1;
  return v;
}

inline std::string join_ints(const std::vector<int>& xs, char sep) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(xs[i]);
  }
  return s;
}

// "d1+d2" or "1+2" → {1, 2}
inline std::vector<int> parse_day_set(const std::string& text) {
  std::vector<int> days;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (!part.empty() && (part[0] == 'd' || part[0] == 'D')) part.erase(0, 1);
    try {
      days.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ValidationError("bad day set '" + text + "' (expected e.g. d1+d2)");
    }
  }
  if (days.size() < 2) throw ValidationError("day set '" + text + "' needs at least two days");
  return days;
}

inline bool dir_non_empty(const std::filesystem::path& p) {
  return std::filesystem::exists(p) && std::filesystem::is_directory(p) &&
         !std::filesystem::is_empty(p);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  int subjects = 7, days = 8, postures = 4;
  int reps = 10;
  double contraction_s = 3.0, rest_s = 3.0, force_level = 1.0;
  int pool = 60;
  std::uint64_t seed = 1;
  // generator variability knobs (defaults match default_model())
  SourceVariabilityModel model = default_model();
  double posture_step = 0.22;  // channel-rotation angle between adjacent postures
  bool force = false;
};

inline int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.out.empty()) throw ValidationError("synth needs an output directory (--out)");
  if (detail::dir_non_empty(a.out) && !a.force)
    throw ValidationError("output directory " + a.out + " is not empty (use --force)");
  DatasetSpec spec;
  spec.subjects = detail::iota1(a.subjects);
  spec.days = detail::iota1(a.days);
  spec.postures = detail::iota1(a.postures);
  spec.protocol.n_repetitions = a.reps;
  spec.protocol.contraction_s = a.contraction_s;
  spec.protocol.rest_s = a.rest_s;
  spec.protocol.force_level = a.force_level;
  spec.pool_size = a.pool;
  spec.seed = a.seed;
  spec.model = a.model;
  spec.model.posture_mix = default_model(a.postures, a.posture_step).posture_mix;
  Manifest manifest = export_dataset(spec, a.out);
  const std::string hash = detail::fnv1a_hex(std::filesystem::path(a.out) / "manifest.csv");

  std::ofstream info(std::filesystem::path(a.out) / "synth_info.txt");
  info << "tool=semg " << kToolVersion << "\n"
       << "command=synth\n"
       << "subjects=" << a.subjects << "\ndays=" << a.days << "\npostures=" << a.postures << "\n"
       << "repetitions=" << a.reps << "\ncontraction_s=" << detail::fmt(a.contraction_s)
       << "\nrest_s=" << detail::fmt(a.rest_s) << "\nforce_level=" << detail::fmt(a.force_level)
       << "\npool=" << a.pool << "\nseed=" << a.seed << "\n"
       << "base_rate_hz=" << detail::fmt(a.model.base_rate_hz) << "\n"
       << "cross_talk=" << detail::fmt(a.model.cross_talk) << "\n"
       << "noise_std=" << detail::fmt(a.model.noise_std) << "\n"
       << "day_gain_scale=" << detail::fmt(a.model.day_gain_scale) << "\n"
       << "day_offset_scale=" << detail::fmt(a.model.day_offset_scale) << "\n"
       << "adaptation0=" << detail::fmt(a.model.adaptation0) << "\n"
       << "adaptation_decay=" << detail::fmt(a.model.adaptation_decay) << "\n"
       << "posture_step=" << detail::fmt(a.posture_step) << "\n"
       << "manifest_hash=" << hash << "\n";
  if (!info) throw IoError("cannot write synth_info.txt");

  out << "wrote " << manifest.entries.size() << " sessions (" << a.subjects << " subjects x "
      << a.days << " days x " << a.postures << " postures) to " << a.out << "\n"
      << "manifest hash " << hash << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// run / report

struct RunArgs {
  std::string data;
  std::string out;
  std::vector<std::string> strategies = {"all"};
  // plan shape
  std::vector<int> single_days;
  int inter_day_anchor = 1;
  int posture_anchor = 1;
  std::vector<int> two_posture_days;
  std::vector<std::string> day_sets = {"d1+d2", "d1+d5", "d4+d5", "d1+d2+d3+d4+d5"};
  std::vector<int> eval_days = {6, 7, 8};
  // dataset handling
  double holdout = 0.10;
  std::uint64_t master_seed = 2024;
  int max_cached = 48;
  // training
  TrainConfig train;
  int jobs = 1;
  bool test = false;
  bool dry_run = false;
  bool no_curves = false;
  bool quiet = false;
};

namespace detail {

inline void write_pvalues_csv(const std::filesystem::path& path,
                              const std::vector<ReportCell>& cells) {
  // pairwise comparisons per scope over strategies that produced cells there
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "scope,strategy_a,strategy_b,n_pairs,statistic,p,exact\n";
  for (EvalScope scope : {EvalScope::InterPosture, EvalScope::InterDay}) {
    std::set<std::string> names;
    for (const auto& c : cells)
      if (c.scope == scope) names.insert(c.strategy);
    std::vector<std::string> list(names.begin(), names.end());
    for (size_t i = 0; i < list.size(); ++i) {
      for (size_t j = i + 1; j < list.size(); ++j) {
        std::vector<ReportCell> a, b;
        for (const auto& c : cells) {
          if (c.strategy == list[i]) a.push_back(c);
          if (c.strategy == list[j]) b.push_back(c);
        }
        WilcoxonResult w;
        try {
          w = strategy_wilcoxon(a, b, scope);
        } catch (const ValidationError&) {
          continue;  // no common pairs or too few nonzero differences
        }
        os << to_string(scope) << ',' << list[i] << ',' << list[j] << ',' << w.n << ','
           << fmt(w.statistic) << ',' << fmt(w.p) << ',' << (w.exact ? 1 : 0) << '\n';
      }
    }
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline void print_summary(const std::vector<StrategyTableRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    out << "  " << r.strategy << ": ";
    bool first = true;
    auto item = [&](const char* name, const AccuracyStats& s) {
      if (s.n == 0) return;
      if (!first) out << ", ";
      first = false;
      out << name << " " << format_mu_se(s) << " [n=" << s.n << "]";
    };
    item("intra", r.intra);
    item("inter-posture", r.inter_posture);
    item("inter-day", r.inter_day);
    item("test", r.test);
    out << "\n";
  }
}

}  // namespace detail

inline int cmd_run(const RunArgs& a, std::ostream& out) {
  if (a.data.empty())
    throw ValidationError("run needs a dataset directory (--data or SEMG_DATA_DIR)");
  if (a.out.empty() && !a.dry_run) throw ValidationError("run needs an output directory (--out)");

  std::set<std::string> sel(a.strategies.begin(), a.strategies.end());
  for (const auto& s : sel)
    if (s != "all" && s != "single-session" && s != "two-posture" && s != "two-day" &&
        s != "five-day" && s != "multi-day")
      throw ValidationError("unknown strategy '" + s + "'");
  const bool all = sel.count("all") != 0;

  DatasetConfig dcfg;
  dcfg.split.holdout_fraction = a.holdout;
  dcfg.master_seed = a.master_seed;
  auto ds = ExperimentDataset::open(a.data, dcfg, a.max_cached);

  PlanConfig pcfg;
  pcfg.single_session = all || sel.count("single-session");
  pcfg.single_days = a.single_days;
  pcfg.inter_day_anchor = a.inter_day_anchor;
  pcfg.two_posture = all || sel.count("two-posture");
  pcfg.posture_anchor = a.posture_anchor;
  pcfg.two_posture_days = a.two_posture_days;
  pcfg.eval_days = a.eval_days;
  const bool want_two_day = all || sel.count("two-day");
  const bool want_multi = all || sel.count("five-day") || sel.count("multi-day");
  pcfg.day_sets.clear();
  for (const auto& text : a.day_sets) {
    auto days = detail::parse_day_set(text);
    if ((days.size() == 2 && want_two_day) || (days.size() > 2 && want_multi))
      pcfg.day_sets.push_back(std::move(days));
  }

  auto plan = plan_experiment(ds.sources(), pcfg);
  if (plan.empty()) throw ValidationError("the requested strategies produce no instances");

  if (a.dry_run) {
    out << "planned " << plan.size() << " instances (" << plan.size() * 2 << " fold models"
        << (a.test ? ", +" + std::to_string(plan.size()) + " retrain jobs" : "") << ")\n";
    for (const auto& inst : plan) {
      out << "  " << inst.strategy << " " << inst.train_key << " train={";
      for (size_t i = 0; i < inst.train_sources.size(); ++i)
        out << (i ? " " : "") << to_string(inst.train_sources[i]);
      out << "} eval={";
      for (size_t i = 0; i < inst.inter_targets.size(); ++i)
        out << (i ? " " : "") << to_string(inst.inter_targets[i]);
      out << "}\n";
    }
    return 0;
  }

  RunOptions opt;
  opt.train = a.train;
  opt.jobs = a.jobs;
  opt.record_curves = !a.no_curves;
  if (!a.quiet) opt.progress = [&out](const std::string& line) { out << line << "\n"; };

  StrategyRunResult res = run_strategy(ds, plan, a.master_seed, opt);
  if (a.test) {
    StrategyRunResult t = retrain_and_test(ds, plan, a.master_seed, opt);
    res.cells.insert(res.cells.end(), t.cells.begin(), t.cells.end());
    std::sort(res.cells.begin(), res.cells.end(), cell_order);
    for (auto& [k, v] : t.curves) res.curves[k] = std::move(v);
    res.failures.insert(res.failures.end(), t.failures.begin(), t.failures.end());
    std::sort(res.failures.begin(), res.failures.end());
  }

  const std::filesystem::path out_dir(a.out);
  std::filesystem::create_directories(out_dir);
  write_cells_csv(out_dir / "cells.csv", res.cells);
  auto rows = strategy_table(res.cells);
  write_strategy_table_csv(out_dir / "strategy_table.csv", rows);
  detail::write_pvalues_csv(out_dir / "pvalues.csv", res.cells);
  if (opt.record_curves) {
    std::filesystem::create_directories(out_dir / "curves");
    for (const auto& [key, curve] : res.curves)
      write_curve_csv(curve, out_dir / "curves" / (key + ".csv"));
  }

  std::ofstream info(out_dir / "run_info.txt");
  info << "tool=semg " << kToolVersion << "\n"
       << "cli11=" << CLI11_VERSION << "\n"
       << "eigen=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
       << EIGEN_MINOR_VERSION << "\n"
       << "command=run\n"
       << "data_dir=" << a.data << "\n"
       << "manifest_hash=" << detail::fnv1a_hex(std::filesystem::path(a.data) / "manifest.csv")
       << "\n"
       << "n_sources=" << ds.sources().size() << "\n"
       << "master_seed=" << a.master_seed << "\n"
       << "holdout_fraction=" << detail::fmt(a.holdout) << "\n"
       << "window_length=" << dcfg.window.length << "\n"
       << "window_stride=" << dcfg.window.stride << "\n"
       << "strategies=";
  for (size_t i = 0; i < a.strategies.size(); ++i) info << (i ? "," : "") << a.strategies[i];
  info << "\nday_sets=";
  for (size_t i = 0; i < pcfg.day_sets.size(); ++i)
    info << (i ? ";" : "") << semg::detail::day_set_label(pcfg.day_sets[i]);
  info << "\neval_days=" << detail::join_ints(a.eval_days, ',') << "\n"
       << "single_days=" << (a.single_days.empty() ? "all" : detail::join_ints(a.single_days, ','))
       << "\n"
       << "two_posture_days="
       << (a.two_posture_days.empty() ? "all" : detail::join_ints(a.two_posture_days, ',')) << "\n"
       << "inter_day_anchor=" << a.inter_day_anchor << "\n"
       << "posture_anchor=" << a.posture_anchor << "\n"
       << "epochs=" << a.train.epochs << "\nlr=" << detail::fmt(a.train.lr) << "\nminibatches="
       << a.train.n_minibatches << "\nlr_drop_epoch=" << a.train.lr_drop_epoch
       << "\nlr_drop_factor=" << detail::fmt(a.train.lr_drop_factor) << "\nweight_decay="
       << detail::fmt(a.train.weight_decay) << "\nval_every=" << a.train.val_every << "\n"
       << "jobs=" << a.jobs << "\ntest=" << (a.test ? 1 : 0) << "\n"
       << "plan_instances=" << plan.size() << "\n"
       << "plan_jobs=" << plan.size() * (a.test ? 3 : 2) << "\n"
       << "seed_streams=holdout;init:<train_key>;train:<train_key>;dropout-stream;epoch-perm\n";
  if (!info) throw IoError("cannot write run_info.txt");

  out << "cells: " << res.cells.size() << ", failures: " << res.failures.size() << "\n";
  detail::print_summary(rows, out);
  if (!res.failures.empty()) {
    out << "failed jobs:\n";
    for (const auto& f : res.failures) out << "  " << f << "\n";
    return 1;
  }
  return 0;
}

struct ReportArgs {
  std::string run_dir;
  std::string cells;
  std::string out;
};

inline int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::filesystem::path cells_path;
  if (!a.cells.empty())
    cells_path = a.cells;
  else if (!a.run_dir.empty())
    cells_path = std::filesystem::path(a.run_dir) / "cells.csv";
  else
    throw ValidationError("report needs --run or --cells");
  auto cells = load_cells_csv(cells_path);
  if (cells.empty()) throw ValidationError("no cells in " + cells_path.string());
  std::filesystem::path out_dir =
      a.out.empty() ? cells_path.parent_path() : std::filesystem::path(a.out);
  std::filesystem::create_directories(out_dir);
  auto rows = strategy_table(cells);
  write_strategy_table_csv(out_dir / "strategy_table.csv", rows);
  detail::write_pvalues_csv(out_dir / "pvalues.csv", cells);
  out << "cells: " << cells.size() << "\n";
  detail::print_summary(rows, out);
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradCheckArgs {
  int batch = 4;
  int samples = 8;
  double step = 1e-5;
  double tol = 1e-4;
  std::uint64_t seed = 99;
  std::string layer;
  double corrupt = 1.0;  // negative-control fixture: scales first tensor's analytic grad
  bool no_dropout = false;
};

inline int cmd_gradcheck(const GradCheckArgs& a, std::ostream& out) {
  if (a.batch < 2) throw ValidationError("gradcheck batch must be >= 2 (batch norm)");
  auto net = Network<double>::build(gesture_net_spec(!a.no_dropout),
                                    derive_seed(a.seed, "gradcheck-init"));
  Rng rng(derive_seed(a.seed, "gradcheck-data"));
  Batch<double> in;
  in.channels = kNumChannels;
  in.length = kWindowLength;
  in.batch = a.batch;
  in.data.resize(kNumChannels, static_cast<Eigen::Index>(kWindowLength) * a.batch);
  for (Eigen::Index r = 0; r < in.data.rows(); ++r)
    for (Eigen::Index c = 0; c < in.data.cols(); ++c) in.data(r, c) = rng.normal();
  std::vector<int> labels(static_cast<size_t>(a.batch));
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(kNumClasses));

  GradCheckConfig cfg;
  cfg.step = a.step;
  cfg.samples_per_tensor = a.samples;
  cfg.seed = derive_seed(a.seed, "gradcheck-picks");
  cfg.name_filter = a.layer;
  cfg.corrupt_factor = a.corrupt;
  GradCheckResult res = grad_check(net, in, labels, cfg);

  char line[160];
  std::snprintf(line, sizeof(line), "checked %d probes (%d zero-gradient skips, %d non-smooth)",
                res.n_checked, res.n_skipped_zero, res.n_skipped_kink);
  out << line << "\n";
  std::snprintf(line, sizeof(line), "max rel err %.3e at %s(%lld,%lld)", res.max_rel_err,
                res.worst.tensor.c_str(), static_cast<long long>(res.worst.row),
                static_cast<long long>(res.worst.col));
  out << line << "\n";
  const bool pass = res.max_rel_err < a.tol;
  std::snprintf(line, sizeof(line), "%s (tol %.1e)", pass ? "PASS" : "FAIL", a.tol);
  out << line << "\n";
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// wiring

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"surface-EMG gesture pipeline: synthesize sessions, train, evaluate"};
  app.set_config("--config", "", "INI file with options (sections per subcommand)");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("semg ") + kToolVersion);

  const char* env_data = std::getenv("SEMG_DATA_DIR");

  SynthArgs sa;
  if (env_data) sa.out = env_data;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  synth->fallthrough();  // lets `semg synth --config f` reach the app-level option
  synth->add_option("--out", sa.out, "output directory (default: $SEMG_DATA_DIR)");
  synth->add_option("--subjects", sa.subjects, "number of subjects")->check(CLI::PositiveNumber);
  synth->add_option("--days", sa.days, "recording days per subject")->check(CLI::PositiveNumber);
  synth->add_option("--postures", sa.postures, "arm postures per day")->check(CLI::PositiveNumber);
  synth->add_option("--reps", sa.reps, "repetitions per gesture class");
  synth->add_option("--contraction", sa.contraction_s, "contraction seconds per repetition");
  synth->add_option("--rest", sa.rest_s, "rest seconds between repetitions");
  synth->add_option("--force-level", sa.force_level, "relative contraction effort");
  synth->add_option("--pool", sa.pool, "motor units per subject pool");
  synth->add_option("--seed", sa.seed, "generator master seed");
  synth->add_option("--base-rate", sa.model.base_rate_hz, "motor unit firing rate (Hz)");
  synth->add_option("--cross-talk", sa.model.cross_talk, "off-channel recruitment leakage");
  synth->add_option("--noise-std", sa.model.noise_std, "sensor noise sigma");
  synth->add_option("--day-gain", sa.model.day_gain_scale, "per-day channel gain spread");
  synth->add_option("--day-offset", sa.model.day_offset_scale, "per-day baseline drift");
  synth->add_option("--adaptation", sa.model.adaptation0, "day-1 execution variability");
  synth->add_option("--adaptation-decay", sa.model.adaptation_decay,
                    "execution variability decay per day");
  synth->add_option("--posture-step", sa.posture_step,
                    "channel-rotation angle between adjacent postures");
  synth->add_flag("--force", sa.force, "overwrite a non-empty output directory");

  RunArgs ra;
  if (env_data) ra.data = env_data;
  auto* runc = app.add_subcommand("run", "train strategies over a dataset and emit reports");
  runc->fallthrough();
  runc->add_option("--data", ra.data, "dataset directory (default: $SEMG_DATA_DIR)");
  runc->add_option("--out", ra.out, "output directory for reports");
  runc->add_option("--strategy", ra.strategies,
                   "all|single-session|two-posture|two-day|five-day (repeatable)");
  runc->add_option("--single-days", ra.single_days, "days getting single-session models")
      ->delimiter(',');
  runc->add_option("--inter-day-anchor", ra.inter_day_anchor,
                   "single-session models on this day also evaluate later days");
  runc->add_option("--posture-anchor", ra.posture_anchor, "first posture of every pair");
  runc->add_option("--two-posture-days", ra.two_posture_days, "days getting posture pairs")
      ->delimiter(',');
  runc->add_option("--day-set", ra.day_sets, "training day set, e.g. d1+d2 (repeatable)");
  runc->add_option("--eval-days", ra.eval_days, "held-out evaluation days")->delimiter(',');
  runc->add_option("--holdout", ra.holdout, "per-session test holdout fraction");
  runc->add_option("--master-seed", ra.master_seed, "seed every derived stream comes from");
  runc->add_option("--max-cached", ra.max_cached, "windowed sessions kept in memory");
  runc->add_option("--epochs", ra.train.epochs, "training epochs");
  runc->add_option("--lr", ra.train.lr, "learning rate");
  runc->add_option("--minibatches", ra.train.n_minibatches, "minibatches per epoch");
  runc->add_option("--lr-drop-epoch", ra.train.lr_drop_epoch, "epochs after which lr drops");
  runc->add_option("--lr-drop-factor", ra.train.lr_drop_factor, "lr multiplier after the drop");
  runc->add_option("--weight-decay", ra.train.weight_decay, "gradient-side L2 coefficient");
  runc->add_option("--val-every", ra.train.val_every,
                   "validation cadence in epochs (0 = final epoch only)");
  runc->add_option("--jobs", ra.jobs, "concurrent training jobs")->check(CLI::PositiveNumber);
  runc->add_flag("--test", ra.test, "retrain on both folds and score the holdout reserve");
  runc->add_flag("--dry-run", ra.dry_run, "list planned jobs without training");
  runc->add_flag("--no-curves", ra.no_curves, "skip learning-curve CSVs");
  runc->add_flag("--quiet", ra.quiet, "suppress per-job progress lines");

  GradCheckArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of backward passes");
  grad->fallthrough();
  grad->add_option("--batch", ga.batch, "probe batch size");
  grad->add_option("--samples", ga.samples, "probes per tensor");
  grad->add_option("--step", ga.step, "central-difference step");
  grad->add_option("--tol", ga.tol, "max relative error to pass");
  grad->add_option("--seed", ga.seed, "seed for data and probe picks");
  grad->add_option("--layer", ga.layer, "restrict to one layer or tensor (e.g. conv1)");
  grad->add_option("--corrupt", ga.corrupt,
                   "scale the first tensor's analytic gradient (negative control)");
  grad->add_flag("--no-dropout", ga.no_dropout, "check the dropout-free architecture");

  ReportArgs pa;
  auto* rep = app.add_subcommand("report", "rebuild tables from a previous run");
  rep->fallthrough();
  rep->add_option("--run", pa.run_dir, "run directory containing cells.csv");
  rep->add_option("--cells", pa.cells, "explicit cells.csv path");
  rep->add_option("--out", pa.out, "output directory (default: next to cells.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa, out);
    if (runc->parsed()) return cmd_run(ra, out);
    if (grad->parsed()) return cmd_gradcheck(ga, out);
    if (rep->parsed()) return cmd_report(pa, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace semg::cli
