#pragma once

// Experiment harness. Turns a dataset directory into the training-strategy
// grid (single-session, posture pairs, day sets), runs the fold-swapped
// trainings, and reduces per-target accuracies into aggregate tables and
// paired statistics.
//
// Every job's seeds derive from (master_seed, purpose, instance key), never
// from shared RNG state, so results are byte-identical regardless of job
// order or worker count.

#include "semg/common.hpp"
#include "semg/network.hpp"
#include "semg/rng.hpp"
#include "semg/session_io.hpp"
#include "semg/stats.hpp"
#include "semg/trainer.hpp"
#include "semg/windowing.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace semg {

// ---------------------------------------------------------------------------
// Dataset handle

struct DatasetConfig {
  WindowConfig window;
  // split.seed is ignored: each source splits with a seed derived from
  // (master_seed, "holdout", subject, day, posture). Holdout membership is a
  // property of the source, shared by every strategy that touches it.
  SplitConfig split;
  std::uint64_t master_seed = 2024;
};

struct WindowedSource {
  SourceId id;
  SessionSplit split;
};

// Loads sessions lazily and keeps a bounded number of windowed sources in
// memory (a full-size session is ~30 MB of windows; a 224-source sweep cannot
// hold them all). Eviction is LRU; entries stay alive through the returned
// shared_ptr for as long as a job uses them.
class ExperimentDataset {
 public:
  ExperimentDataset(std::filesystem::path dir, Manifest manifest, DatasetConfig cfg,
                    int max_cached = 48)
      : dir_(std::move(dir)), manifest_(std::move(manifest)), cfg_(cfg), max_cached_(max_cached) {
    if (max_cached_ < 1) throw ValidationError("ExperimentDataset: max_cached must be >= 1");
    validate(cfg_.window);
    validate(cfg_.split);
    for (const auto& e : manifest_.entries) by_id_[e.source] = &e;
  }

  static ExperimentDataset open(const std::filesystem::path& dir, DatasetConfig cfg,
                                int max_cached = 48) {
    return ExperimentDataset(dir, load_manifest(dir / "manifest.csv"), cfg, max_cached);
  }

  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }
  const DatasetConfig& config() const { return cfg_; }

  bool has(const SourceId& id) const { return by_id_.count(id) != 0; }

  std::vector<SourceId> sources() const {
    std::vector<SourceId> out;
    out.reserve(by_id_.size());
    for (const auto& [id, e] : by_id_) out.push_back(id);
    return out;
  }

  std::shared_ptr<const WindowedSource> load(const SourceId& id) {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(id); it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.pos);
      return it->second.ws;
    }
    auto mi = by_id_.find(id);
    if (mi == by_id_.end()) throw IoError("dataset has no source " + to_string(id));
    SessionRecording rec = load_session(dir_ / mi->second->file);
    auto ws = std::make_shared<WindowedSource>();
    ws->id = id;
    SplitConfig sc = cfg_.split;
    sc.seed = derive_seed(cfg_.master_seed, "holdout", static_cast<std::uint64_t>(id.subject),
                          static_cast<std::uint64_t>(id.day), static_cast<std::uint64_t>(id.posture));
    ws->split = split_session(make_windows(rec, cfg_.window), sc);
    lru_.push_front(id);
    cache_[id] = Entry{ws, lru_.begin()};
    while (static_cast<int>(cache_.size()) > max_cached_) {
      cache_.erase(lru_.back());
      lru_.pop_back();
    }
    return ws;
  }

 private:
  struct Entry {
    std::shared_ptr<const WindowedSource> ws;
    std::list<SourceId>::iterator pos;
  };

  std::filesystem::path dir_;
  Manifest manifest_;
  DatasetConfig cfg_;
  int max_cached_;
  std::map<SourceId, const ManifestEntry*> by_id_;
  std::mutex mu_;
  std::map<SourceId, Entry> cache_;
  std::list<SourceId> lru_;
};

// ---------------------------------------------------------------------------
// Strategy planning

// One training instance; each instance trains two models (one per fold).
struct StrategyInstance {
  std::string strategy;   // e.g. "two-day(d1+d2)"
  std::string train_key;  // unique id, e.g. "s1_p3_d1+d2"
  std::vector<SourceId> train_sources;
  std::vector<SourceId> inter_targets;  // disjoint from train_sources
};

struct PlanConfig {
  bool single_session = true;
  // Days whose sources get single-session instances; empty = every day.
  std::vector<int> single_days;
  // Single-session models trained on this day also evaluate the same
  // subject+posture on every later day (the inter-day baseline row).
  int inter_day_anchor = 1;

  bool two_posture = true;
  int posture_anchor = 1;  // pairs are {anchor, other}
  // Days on which posture pairs are formed; empty = every day.
  std::vector<int> two_posture_days;

  // Multi-day training sets; two-day sets and the full set in one list.
  std::vector<std::vector<int>> day_sets = {{1, 2}, {1, 5}, {4, 5}, {1, 2, 3, 4, 5}};
  std::vector<int> eval_days = {6, 7, 8};  // inter-day targets for day sets
};

namespace detail {

inline bool contains(const std::vector<int>& xs, int v) {
  return std::find(xs.begin(), xs.end(), v) != xs.end();
}

inline std::string day_set_label(const std::vector<int>& days) {
  std::string s;
  for (size_t i = 0; i < days.size(); ++i) {
    if (i) s += '+';
    s += 'd';
    s += std::to_string(days[i]);
  }
  return s;
}

}  // namespace detail

inline std::vector<StrategyInstance> plan_experiment(const std::vector<SourceId>& sources,
                                                     const PlanConfig& cfg) {
  std::set<SourceId> present(sources.begin(), sources.end());
  std::set<int> subjects, days, postures;
  for (const auto& s : present) {
    subjects.insert(s.subject);
    days.insert(s.day);
    postures.insert(s.posture);
  }
  std::vector<StrategyInstance> plan;

  if (cfg.single_session) {
    for (const auto& src : present) {
      if (!cfg.single_days.empty() && !detail::contains(cfg.single_days, src.day)) continue;
      StrategyInstance inst;
      inst.strategy = "single-session";
      inst.train_key = to_string(src);
      inst.train_sources = {src};
      for (int p : postures) {
        SourceId t{src.subject, src.day, p};
        if (p != src.posture && present.count(t)) inst.inter_targets.push_back(t);
      }
      if (src.day == cfg.inter_day_anchor) {
        for (int d : days) {
          SourceId t{src.subject, d, src.posture};
          if (d > src.day && present.count(t)) inst.inter_targets.push_back(t);
        }
      }
      plan.push_back(std::move(inst));
    }
  }

  if (cfg.two_posture) {
    for (int su : subjects) {
      for (int d : days) {
        if (!cfg.two_posture_days.empty() && !detail::contains(cfg.two_posture_days, d)) continue;
        for (int other : postures) {
          if (other == cfg.posture_anchor) continue;
          SourceId a{su, d, cfg.posture_anchor}, b{su, d, other};
          if (!present.count(a) || !present.count(b)) continue;
          StrategyInstance inst;
          inst.strategy = "two-posture(p" + std::to_string(cfg.posture_anchor) + "+p" +
                          std::to_string(other) + ")";
          char key[64];
          std::snprintf(key, sizeof(key), "s%d_d%d_p%d+p%d", su, d, cfg.posture_anchor, other);
          inst.train_key = key;
          inst.train_sources = {std::min(a, b), std::max(a, b)};
          for (int p : postures) {
            SourceId t{su, d, p};
            if (p != cfg.posture_anchor && p != other && present.count(t))
              inst.inter_targets.push_back(t);
          }
          plan.push_back(std::move(inst));
        }
      }
    }
  }

  for (const auto& set : cfg.day_sets) {
    if (set.size() < 2) throw ValidationError("day sets need at least two days");
    std::vector<int> sorted_set = set;
    std::sort(sorted_set.begin(), sorted_set.end());
    const std::string label = (sorted_set.size() == 2 ? "two-day(" : "multi-day(") +
                              detail::day_set_label(sorted_set) + ")";
    for (int su : subjects) {
      for (int p : postures) {
        StrategyInstance inst;
        bool complete = true;
        for (int d : sorted_set) {
          SourceId s{su, d, p};
          if (!present.count(s)) {
            complete = false;
            break;
          }
          inst.train_sources.push_back(s);
        }
        if (!complete) continue;
        inst.strategy = label;
        inst.train_key = "s" + std::to_string(su) + "_p" + std::to_string(p) + "_" +
                         detail::day_set_label(sorted_set);
        for (int d : cfg.eval_days) {
          SourceId t{su, d, p};
          if (present.count(t) && !detail::contains(sorted_set, d)) inst.inter_targets.push_back(t);
        }
        plan.push_back(std::move(inst));
      }
    }
  }

  for (const auto& inst : plan)
    for (const auto& t : inst.inter_targets)
      for (const auto& s : inst.train_sources)
        if (t == s) throw ValidationError("plan bug: inter target inside training set");
  return plan;
}

// ---------------------------------------------------------------------------
// Cells

enum class EvalScope { Intra, InterPosture, InterDay, Test };

inline const char* to_string(EvalScope s) {
  switch (s) {
    case EvalScope::Intra: return "intra";
    case EvalScope::InterPosture: return "inter-posture";
    case EvalScope::InterDay: return "inter-day";
    case EvalScope::Test: return "test";
  }
  return "?";
}

inline EvalScope scope_from_string(const std::string& s) {
  if (s == "intra") return EvalScope::Intra;
  if (s == "inter-posture") return EvalScope::InterPosture;
  if (s == "inter-day") return EvalScope::InterDay;
  if (s == "test") return EvalScope::Test;
  throw ValidationError("unknown eval scope: " + s);
}

struct ReportCell {
  std::string strategy;
  std::string train_key;
  SourceId eval;
  int fold = 1;  // fold trained on; 0 for both-fold retraining
  EvalScope scope = EvalScope::Intra;
  double accuracy = 0.0;
  int n_windows = 0;
};

inline bool cell_order(const ReportCell& a, const ReportCell& b) {
  return std::tie(a.strategy, a.train_key, a.fold, a.scope, a.eval) <
         std::tie(b.strategy, b.train_key, b.fold, b.scope, b.eval);
}

// ---------------------------------------------------------------------------
// Runner

struct RunOptions {
  TrainConfig train;  // .seed is ignored; per-model seeds derive from the master seed
  int jobs = 1;
  bool record_curves = true;
  int eval_batch = 256;
  std::function<void(const std::string&)> progress;  // optional status sink
};

struct StrategyRunResult {
  std::vector<ReportCell> cells;
  std::map<std::string, LearningCurve> curves;  // key: "<train_key>_fold<f>"
  std::vector<std::string> failures;            // one line per failed job
};

namespace detail {

struct TrainJob {
  const StrategyInstance* inst = nullptr;
  int fold = 1;  // 0 = train on both folds, evaluate holdout (final test)
};

inline const std::vector<LabeledWindow>& fold_of(const WindowedSource& ws, int fold) {
  return fold == 1 ? ws.split.fold1 : ws.split.fold2;
}

inline std::vector<LabeledWindow> zscored(const std::vector<LabeledWindow>& in,
                                          const ChannelStats& st) {
  std::vector<LabeledWindow> out = in;
  apply_channel_stats(out, st);
  return out;
}

// Runs one training and appends cells/curve under the result mutex.
inline void run_train_job(ExperimentDataset& ds, const TrainJob& job, const RunOptions& opt,
                          std::uint64_t master_seed, StrategyRunResult& res, std::mutex& res_mu) {
  const StrategyInstance& inst = *job.inst;
  const bool final_test = job.fold == 0;

  std::vector<std::shared_ptr<const WindowedSource>> train_srcs;
  train_srcs.reserve(inst.train_sources.size());
  for (const auto& id : inst.train_sources) train_srcs.push_back(ds.load(id));

  std::vector<LabeledWindow> train_w, val_w;
  for (const auto& ws : train_srcs) {
    const auto& f1 = ws->split.fold1;
    const auto& f2 = ws->split.fold2;
    if (final_test) {
      train_w.insert(train_w.end(), f1.begin(), f1.end());
      train_w.insert(train_w.end(), f2.begin(), f2.end());
    } else {
      const auto& tr = fold_of(*ws, job.fold);
      const auto& va = fold_of(*ws, 3 - job.fold);
      train_w.insert(train_w.end(), tr.begin(), tr.end());
      val_w.insert(val_w.end(), va.begin(), va.end());
    }
  }
  const ChannelStats st = fit_channel_stats(train_w);
  apply_channel_stats(train_w, st);
  apply_channel_stats(val_w, st);

  const std::string purpose = (final_test ? "retrain:" : "model:") + inst.train_key;
  const auto fold_key = static_cast<std::uint64_t>(job.fold);
  auto net = Network<float>::build(gesture_net_spec(true),
                                   derive_seed(master_seed, "init:" + purpose, fold_key));
  TrainConfig tc = opt.train;
  tc.seed = derive_seed(master_seed, "train:" + purpose, fold_key);
  LearningCurve curve = train(net, train_w, val_w, tc);

  std::vector<ReportCell> cells;
  auto add_cell = [&](const SourceId& target, EvalScope scope,
                      const std::vector<LabeledWindow>& raw) {
    if (raw.empty()) return;
    auto z = zscored(raw, st);
    EvalMetrics m = evaluate(net, z, opt.eval_batch);
    cells.push_back(ReportCell{inst.strategy, inst.train_key, target, job.fold, scope, m.accuracy,
                               m.n});
  };

  std::set<int> train_days;
  for (const auto& id : inst.train_sources) train_days.insert(id.day);

  if (final_test) {
    for (const auto& id : inst.inter_targets) add_cell(id, EvalScope::Test, ds.load(id)->split.holdout);
  } else {
    for (const auto& ws : train_srcs)
      add_cell(ws->id, EvalScope::Intra, fold_of(*ws, 3 - job.fold));
    for (const auto& id : inst.inter_targets) {
      auto tgt = ds.load(id);
      std::vector<LabeledWindow> both = tgt->split.fold1;
      both.insert(both.end(), tgt->split.fold2.begin(), tgt->split.fold2.end());
      add_cell(id, train_days.count(id.day) ? EvalScope::InterPosture : EvalScope::InterDay, both);
    }
  }

  std::lock_guard<std::mutex> lock(res_mu);
  res.cells.insert(res.cells.end(), cells.begin(), cells.end());
  if (opt.record_curves)
    res.curves[inst.train_key + (final_test ? "_both" : "_fold" + std::to_string(job.fold))] =
        std::move(curve);
}

inline StrategyRunResult run_jobs(ExperimentDataset& ds, const std::vector<TrainJob>& jobs,
                                  std::uint64_t master_seed, const RunOptions& opt) {
  if (opt.jobs < 1) throw ValidationError("RunOptions.jobs must be >= 1");
  StrategyRunResult res;
  std::mutex res_mu;
  std::atomic<size_t> next{0};
  std::atomic<int> done{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const TrainJob& job = jobs[i];
      try {
        run_train_job(ds, job, opt, master_seed, res, res_mu);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(res_mu);
        res.failures.push_back(job.inst->train_key + " fold " + std::to_string(job.fold) + ": " +
                               e.what());
      }
      if (opt.progress) {
        const int d = ++done;
        std::lock_guard<std::mutex> lock(res_mu);
        opt.progress("[" + std::to_string(d) + "/" + std::to_string(jobs.size()) + "] " +
                     job.inst->train_key + " fold " + std::to_string(job.fold));
      }
    }
  };
  if (opt.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < opt.jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(res.cells.begin(), res.cells.end(), cell_order);
  std::sort(res.failures.begin(), res.failures.end());
  return res;
}

}  // namespace detail

// Trains two fold-swapped models per instance and evaluates intra (the unused
// fold of each training source) and inter (both folds of each target).
inline StrategyRunResult run_strategy(ExperimentDataset& ds,
                                      const std::vector<StrategyInstance>& plan,
                                      std::uint64_t master_seed, const RunOptions& opt = {}) {
  for (const auto& inst : plan)
    for (const auto& id : inst.train_sources)
      if (!ds.has(id)) throw IoError("missing training source " + to_string(id));
  std::vector<detail::TrainJob> jobs;
  jobs.reserve(plan.size() * 2);
  for (const auto& inst : plan)
    for (int f : {1, 2}) jobs.push_back(detail::TrainJob{&inst, f});
  return detail::run_jobs(ds, jobs, master_seed, opt);
}

// Final-test phase: retrains each instance on fold1 ∪ fold2 and evaluates
// only the targets' holdout windows (never touched during strategy runs).
inline StrategyRunResult retrain_and_test(ExperimentDataset& ds,
                                          const std::vector<StrategyInstance>& plan,
                                          std::uint64_t master_seed, const RunOptions& opt = {}) {
  for (const auto& inst : plan)
    for (const auto& id : inst.train_sources)
      if (!ds.has(id)) throw IoError("missing training source " + to_string(id));
  std::vector<detail::TrainJob> jobs;
  jobs.reserve(plan.size());
  for (const auto& inst : plan) jobs.push_back(detail::TrainJob{&inst, 0});
  return detail::run_jobs(ds, jobs, master_seed, opt);
}

// ---------------------------------------------------------------------------
// Cell reduction

inline std::vector<double> cell_accuracies(const std::vector<ReportCell>& cells,
                                           const std::function<bool(const ReportCell&)>& pred) {
  std::vector<double> out;
  for (const auto& c : cells)
    if (pred(c)) out.push_back(c.accuracy);
  return out;
}

// group_of maps a cell to its group name (empty string = drop the cell).
inline std::map<std::string, AccuracyStats> aggregate_cells(
    const std::vector<ReportCell>& cells,
    const std::function<std::string(const ReportCell&)>& group_of) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& c : cells) {
    std::string g = group_of(c);
    if (!g.empty()) groups[std::move(g)].push_back(c.accuracy);
  }
  std::map<std::string, AccuracyStats> out;
  for (auto& [g, xs] : groups) out[g] = accuracy_stats(xs);
  return out;
}

// Per-instance accuracy drop: for each (train_key, fold) with both an intra
// mean and an inter mean of the requested scope, drop = intra − inter. The
// pairing is what makes the statistic meaningful; reassigning inter cells to
// other instances changes it.
inline AccuracyStats accuracy_drop(const std::vector<ReportCell>& cells, EvalScope inter_scope) {
  if (inter_scope == EvalScope::Intra)
    throw ValidationError("accuracy_drop: inter scope cannot be intra");
  struct Acc {
    std::vector<double> intra, inter;
  };
  std::map<std::pair<std::string, int>, Acc> by_model;
  for (const auto& c : cells) {
    if (c.scope == EvalScope::Intra)
      by_model[{c.train_key, c.fold}].intra.push_back(c.accuracy);
    else if (c.scope == inter_scope)
      by_model[{c.train_key, c.fold}].inter.push_back(c.accuracy);
  }
  std::vector<double> drops;
  for (const auto& [key, acc] : by_model) {
    if (acc.intra.empty() || acc.inter.empty()) continue;
    const double i = std::accumulate(acc.intra.begin(), acc.intra.end(), 0.0) /
                     static_cast<double>(acc.intra.size());
    const double o = std::accumulate(acc.inter.begin(), acc.inter.end(), 0.0) /
                     static_cast<double>(acc.inter.size());
    drops.push_back(i - o);
  }
  if (drops.empty()) throw ValidationError("accuracy_drop: no paired intra/inter instances");
  return accuracy_stats(drops);
}

// Paired comparison of two strategies: cells pair on (eval source, fold) so
// each pair contrasts the strategies on the same evaluation data. When a
// strategy evaluates one target from several models (single-session does),
// their accuracies average into one sample.
inline WilcoxonResult strategy_wilcoxon(const std::vector<ReportCell>& a,
                                        const std::vector<ReportCell>& b, EvalScope scope) {
  using Key = std::tuple<int, int, int, int>;
  auto collect = [&](const std::vector<ReportCell>& cells) {
    std::map<Key, std::pair<double, int>> sums;
    for (const auto& c : cells)
      if (c.scope == scope) {
        auto& [sum, n] = sums[{c.eval.subject, c.eval.day, c.eval.posture, c.fold}];
        sum += c.accuracy;
        ++n;
      }
    std::map<Key, double> m;
    for (const auto& [k, sn] : sums) m[k] = sn.first / sn.second;
    return m;
  };
  const auto ma = collect(a), mb = collect(b);
  std::vector<double> x, y;
  for (const auto& [k, v] : ma) {
    auto it = mb.find(k);
    if (it == mb.end()) continue;
    x.push_back(v);
    y.push_back(it->second);
  }
  if (x.empty()) throw ValidationError("strategy_wilcoxon: no common (eval, fold) pairs");
  return wilcoxon_signed_rank(x, y);
}

// ---------------------------------------------------------------------------
// CSV emission

inline void write_cells_csv(const std::filesystem::path& path,
                            const std::vector<ReportCell>& cells) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "strategy,train_key,subject,day,posture,fold,scope,accuracy,n_windows\n";
  char buf[64];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf), "%.17g", c.accuracy);
    os << c.strategy << ',' << c.train_key << ',' << c.eval.subject << ',' << c.eval.day << ','
       << c.eval.posture << ',' << c.fold << ',' << to_string(c.scope) << ',' << buf << ','
       << c.n_windows << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<ReportCell> load_cells_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty cells file: " + path.string());
  if (line != "strategy,train_key,subject,day,posture,fold,scope,accuracy,n_windows")
    throw IoError("unexpected cells header: " + line);
  std::vector<ReportCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 9) throw IoError("malformed cells row: " + line);
    ReportCell c;
    c.strategy = f[0];
    c.train_key = f[1];
    try {
      c.eval = SourceId{std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4])};
      c.fold = std::stoi(f[5]);
      c.scope = scope_from_string(f[6]);
      c.accuracy = std::stod(f[7]);
      c.n_windows = std::stoi(f[8]);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw IoError("malformed cells row: " + line);
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

inline std::string format_pct(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
  return buf;
}

// "(94.5±0.4)%" — the formatting used in report tables and logs.
inline std::string format_mu_se(const AccuracyStats& s) {
  if (!std::isfinite(s.mean)) return "n/a";
  if (!std::isfinite(s.se)) return "(" + format_pct(s.mean) + "±n/a)%";
  return "(" + format_pct(s.mean) + "±" + format_pct(s.se) + ")%";
}

struct StrategyTableRow {
  std::string strategy;
  AccuracyStats intra, inter_posture, inter_day, test;
  AccuracyStats drop_posture, drop_day;
};

// One row per strategy: aggregate accuracies per scope plus paired drops.
inline std::vector<StrategyTableRow> strategy_table(const std::vector<ReportCell>& cells) {
  std::map<std::string, std::vector<ReportCell>> by_strategy;
  for (const auto& c : cells) by_strategy[c.strategy].push_back(c);
  std::vector<StrategyTableRow> rows;
  for (auto& [name, sc] : by_strategy) {
    StrategyTableRow row;
    row.strategy = name;
    auto acc_of = [&](EvalScope scope) {
      return accuracy_stats(
          cell_accuracies(sc, [&](const ReportCell& c) { return c.scope == scope; }));
    };
    row.intra = acc_of(EvalScope::Intra);
    row.inter_posture = acc_of(EvalScope::InterPosture);
    row.inter_day = acc_of(EvalScope::InterDay);
    row.test = acc_of(EvalScope::Test);
    if (row.intra.n > 0 && row.inter_posture.n > 0)
      row.drop_posture = accuracy_drop(sc, EvalScope::InterPosture);
    if (row.intra.n > 0 && row.inter_day.n > 0) row.drop_day = accuracy_drop(sc, EvalScope::InterDay);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Percent values at one decimal; absent scopes stay blank.
inline void write_strategy_table_csv(const std::filesystem::path& path,
                                     const std::vector<StrategyTableRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "strategy,n_intra,intra_mu,intra_se,intra_sigma,"
        "n_inter_posture,inter_posture_mu,inter_posture_se,inter_posture_sigma,drop_posture_mu,"
        "n_inter_day,inter_day_mu,inter_day_se,inter_day_sigma,drop_day_mu,"
        "n_test,test_mu,test_se\n";
  auto stats_cols = [&](const AccuracyStats& s, bool with_sigma) {
    os << s.n << ',' << format_pct(s.mean) << ',' << format_pct(s.se);
    if (with_sigma) os << ',' << format_pct(s.stddev);
  };
  for (const auto& r : rows) {
    os << r.strategy << ',';
    stats_cols(r.intra, true);
    os << ',';
    stats_cols(r.inter_posture, true);
    os << ',' << format_pct(r.drop_posture.mean) << ',';
    stats_cols(r.inter_day, true);
    os << ',' << format_pct(r.drop_day.mean) << ',';
    stats_cols(r.test, false);
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace semg
