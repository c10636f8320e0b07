#pragma once

// Ground-truth dataset generation and the training-data filters. Load
// profiles are swept over a scale grid with polar-Laplace noise, labeled by
// long ADMM runs (after a centralized feasibility pre-check), and filtered
// per region by convergence quality or target dispersion.

#include <optional>

#include "gridmm/agents.hpp"
#include "gridmm/fnn.hpp"
#include "gridmm/two_level.hpp"

namespace gridmm {

struct LoadSample {
  int id = 0;
  double scale = 1.0;
  VectorXd pd, qd;
};

struct TrainingInstance {
  int id = 0;
  double scale = 1.0;
  VectorXd pd, qd;
  bool feasible = false;
  bool two_level = false;
  std::vector<CouplingTargets> targets;  // per region; empty when infeasible
  std::vector<double> rp_score, rd_score, sz_score;  // per region
  double objective = 0.0;          // total objective of the labeling run
  double central_objective = 0.0;  // centralized solve from the pre-check
  std::string note;
};

// Scale grid with per-load polar-Laplace noise: exponential magnitude with
// mean noise_frac * |S|, uniform angle, added in the complex plane.
inline std::vector<LoadSample> generate_instances(const PowerNetwork& net,
                                                  double scale_lo, double scale_hi,
                                                  double step, double noise_frac,
                                                  std::uint64_t seed) {
  if (scale_hi < scale_lo || step <= 0.0)
    throw std::invalid_argument("bad scale grid");
  int count = static_cast<int>(std::floor((scale_hi - scale_lo) / step + 1e-9)) + 1;
  std::vector<LoadSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  const int nloads = static_cast<int>(net.loads.size());
  for (int i = 0; i < count; ++i) {
    LoadSample sample;
    sample.id = i;
    sample.scale = scale_lo + i * step;
    sample.pd.resize(nloads);
    sample.qd.resize(nloads);
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1)));
    for (int d = 0; d < nloads; ++d) {
      double pd = sample.scale * net.loads[static_cast<std::size_t>(d)].pd;
      double qd = sample.scale * net.loads[static_cast<std::size_t>(d)].qd;
      if (noise_frac > 0.0) {
        double mean = noise_frac * std::hypot(pd, qd);
        double mag = -mean * std::log(1.0 - rng_uniform(rng));
        double ang = 2.0 * M_PI * rng_uniform(rng);
        pd += mag * std::cos(ang);
        qd += mag * std::sin(ang);
      }
      sample.pd[d] = pd;
      sample.qd[d] = qd;
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

struct LabelConfig {
  EngineMode engine = EngineMode::one_level;
  double rho0 = 10.0;
  int iters = 3000;
  AdmmConfig cfg;                 // early stop etc.
  TwoLevelParams two_level;       // beta defaults to 0.5 rho0 when zero
  bool inf_norm_scores = true;    // infinity norm; 2-norm otherwise
  SolverOptions feas_solver;      // centralized feasibility pre-check
};

// Labels one load sample: feasibility pre-check via the centralized solve,
// then a long cold-start run whose final consensus/duals (and slacks) are
// the targets. Deterministic for a fixed configuration.
inline TrainingInstance label_instance(const PowerNetwork& net,
                                       const std::vector<RegionView>& views,
                                       const LoadSample& sample,
                                       const LabelConfig& lc) {
  TrainingInstance inst;
  inst.id = sample.id;
  inst.scale = sample.scale;
  inst.pd = sample.pd;
  inst.qd = sample.qd;
  inst.two_level = lc.engine == EngineMode::two_level;

  RegionIndexing cix = build_indexing(net, whole_network_view(net));
  NlpProblem central = assemble_centralized_problem(net, cix, sample.pd, sample.qd);
  NlpSolution feas = solve(central, lc.feas_solver);
  if (feas.status != SolveStatus::converged) {
    inst.feasible = false;
    inst.note = "no feasible AC solution (centralized solve " +
                std::string(to_string(feas.status)) + ")";
    return inst;
  }

  TwoLevelState st;
  if (inst.two_level) {
    st = two_level_cold_start(net, views, lc.rho0);
    if (lc.two_level.beta > 0.0) st.tl = lc.two_level;
  } else {
    static_cast<ConsensusState&>(st) = cold_start(net, views, lc.rho0);
  }
  AdmmTrace trace = admmdetail::run_core(net, views, sample.pd, sample.qd, st,
                                         inst.two_level ? &st.tl : nullptr, lc.cfg,
                                         lc.iters);
  if (trace.status == SolveStatus::failure || trace.iters.empty()) {
    inst.feasible = false;
    inst.note = "labeling run failed: " + trace.error;
    return inst;
  }

  inst.feasible = true;
  inst.central_objective = feas.objective;
  const IterRecord& last = trace.iters.back();
  inst.objective = trace_total_objective(last);
  for (std::size_t k = 0; k < views.size(); ++k) {
    inst.targets.push_back(region_targets(st, static_cast<int>(k), inst.two_level));
    const auto& slots = st.cidx.region_slots[k];
    double rp_inf = 0, rd_inf = 0, rp_2 = 0, rd_2 = 0;
    for (int slot : slots) {
      rp_inf = std::max(rp_inf, std::abs(last.r_p[slot]));
      rd_inf = std::max(rd_inf, std::abs(last.r_d[slot]));
      rp_2 += last.r_p[slot] * last.r_p[slot];
      rd_2 += last.r_d[slot] * last.r_d[slot];
    }
    inst.rp_score.push_back(lc.inf_norm_scores ? rp_inf : std::sqrt(rp_2));
    inst.rd_score.push_back(lc.inf_norm_scores ? rd_inf : std::sqrt(rd_2));
    inst.sz_score.push_back(inst.two_level ? slack_score(st, static_cast<int>(k))
                                           : 0.0);
  }
  return inst;
}

inline std::vector<TrainingInstance> label_instances(
    const PowerNetwork& net, const std::vector<RegionView>& views,
    const std::vector<LoadSample>& samples, const LabelConfig& lc,
    int workers = 1) {
  std::vector<TrainingInstance> out(samples.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < samples.size(); ++i)
    tasks.push_back([&, i]() { out[i] = label_instance(net, views, samples[i], lc); });
  agentdetail::pool_executor(workers, tasks);
  return out;
}

inline std::vector<const TrainingInstance*> feasible_only(
    const std::vector<TrainingInstance>& all) {
  std::vector<const TrainingInstance*> out;
  for (const auto& inst : all)
    if (inst.feasible) out.push_back(&inst);
  return out;
}

// --- filters; all operate on one region's view of the data ---

struct FilterSpec {
  enum class Kind { convergence, stddev } kind = Kind::convergence;
  double alpha = 0.5;    // convergence quantile, in (0, 1]
  double beta_sd = 2.0;  // standard-deviation multiplier, > 0
};

namespace filterdetail {

inline double threshold_at(std::vector<double> scores, double alpha) {
  std::sort(scores.begin(), scores.end());
  int idx = static_cast<int>(std::ceil(alpha * static_cast<double>(scores.size())));
  idx = std::clamp(idx, 1, static_cast<int>(scores.size()));
  return scores[static_cast<std::size_t>(idx - 1)];
}

}  // namespace filterdetail

// Keeps instances whose primal AND dual residue scores sit at or below the
// alpha-quantile thresholds of this region's score arrays.
inline std::vector<int> convergence_filter(
    const std::vector<const TrainingInstance*>& T, int region, double alpha) {
  if (T.empty()) throw std::invalid_argument("convergence filter on empty data");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must be in (0, 1]");
  std::vector<double> rp, rd;
  for (const auto* inst : T) {
    rp.push_back(inst->rp_score[static_cast<std::size_t>(region)]);
    rd.push_back(inst->rd_score[static_cast<std::size_t>(region)]);
  }
  double rp_thr = filterdetail::threshold_at(rp, alpha);
  double rd_thr = filterdetail::threshold_at(rd, alpha);
  std::vector<int> keep;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (rp[i] <= rp_thr && rd[i] <= rd_thr) keep.push_back(static_cast<int>(i));
  return keep;
}

// Two-level analogue keyed on the slack distance score.
inline std::vector<int> slack_convergence_filter(
    const std::vector<const TrainingInstance*>& T, int region, double alpha) {
  if (T.empty()) throw std::invalid_argument("slack filter on empty data");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must be in (0, 1]");
  std::vector<double> sz;
  for (const auto* inst : T) {
    if (!inst->two_level)
      throw std::invalid_argument("slack filter needs two-level instances");
    sz.push_back(inst->sz_score[static_cast<std::size_t>(region)]);
  }
  double thr = filterdetail::threshold_at(sz, alpha);
  std::vector<int> keep;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (sz[i] <= thr) keep.push_back(static_cast<int>(i));
  return keep;
}

// Componentwise z-score test over every target component of every quantity
// type; an instance survives only if all of its components do. Zero-variance
// components pass by construction.
inline std::vector<int> stddev_filter(const std::vector<const TrainingInstance*>& T,
                                      int region, double beta_sd) {
  if (!(beta_sd > 0.0)) throw std::invalid_argument("beta_sd must be > 0");
  if (T.size() < 2) throw std::invalid_argument("stddev filter needs at least 2 instances");
  int nq = quantity_count(T[0]->two_level);
  std::vector<int> keep;
  std::vector<VectorXd> mean(static_cast<std::size_t>(nq)), stdev(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    VectorXd first = extract_quantity(T[0]->targets[static_cast<std::size_t>(region)],
                                      static_cast<Quantity>(q));
    MatrixXd samples(first.size(), static_cast<int>(T.size()));
    for (std::size_t i = 0; i < T.size(); ++i)
      samples.col(static_cast<int>(i)) = extract_quantity(
          T[i]->targets[static_cast<std::size_t>(region)], static_cast<Quantity>(q));
    mean[static_cast<std::size_t>(q)] = samples.rowwise().mean();
    VectorXd var = (samples.colwise() - mean[static_cast<std::size_t>(q)])
                       .rowwise()
                       .squaredNorm() /
                   static_cast<double>(T.size());
    stdev[static_cast<std::size_t>(q)] = var.cwiseSqrt();
  }
  for (std::size_t i = 0; i < T.size(); ++i) {
    bool ok = true;
    for (int q = 0; q < nq && ok; ++q) {
      VectorXd y = extract_quantity(T[i]->targets[static_cast<std::size_t>(region)],
                                    static_cast<Quantity>(q));
      for (int c = 0; c < y.size(); ++c) {
        double sd = stdev[static_cast<std::size_t>(q)][c];
        if (sd <= 0.0) continue;  // value equals the mean
        if (std::abs(y[c] - mean[static_cast<std::size_t>(q)][c]) > beta_sd * sd) {
          ok = false;
          break;
        }
      }
    }
    if (ok) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

inline std::vector<int> apply_filter(const std::vector<const TrainingInstance*>& T,
                                     int region, const FilterSpec& spec) {
  if (spec.kind == FilterSpec::Kind::stddev)
    return stddev_filter(T, region, spec.beta_sd);
  if (!T.empty() && T[0]->two_level)
    return slack_convergence_filter(T, region, spec.alpha);
  return convergence_filter(T, region, spec.alpha);
}

// --- train/test split ---

struct SplitManifest {
  std::vector<int> train_ids, test_ids;
};

inline SplitManifest make_split(const std::vector<int>& ids, double train_frac,
                                std::uint64_t seed) {
  std::vector<int> shuffled = ids;
  std::mt19937_64 rng(seed);
  for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(shuffled[static_cast<std::size_t>(i)], shuffled[static_cast<std::size_t>(j)]);
  }
  SplitManifest split;
  std::size_t ntrain = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(shuffled.size())));
  for (std::size_t i = 0; i < shuffled.size(); ++i)
    (i < ntrain ? split.train_ids : split.test_ids).push_back(shuffled[i]);
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

// --- bridging to the predictor bank ---

inline RegionDataset build_region_dataset(
    const std::vector<const TrainingInstance*>& T, const std::vector<int>& keep,
    int region, bool two_level) {
  RegionDataset data;
  if (keep.empty()) throw std::invalid_argument("empty training selection");
  int n_in = static_cast<int>(T[0]->pd.size()) * 2;
  data.X.resize(n_in, static_cast<int>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const TrainingInstance& inst = *T[static_cast<std::size_t>(keep[c])];
    data.X.col(static_cast<int>(c)) << inst.pd, inst.qd;
  }
  int nq = quantity_count(two_level);
  for (int q = 0; q < nq; ++q) {
    VectorXd first = extract_quantity(
        T[static_cast<std::size_t>(keep[0])]->targets[static_cast<std::size_t>(region)],
        static_cast<Quantity>(q));
    MatrixXd Y(first.size(), static_cast<int>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      Y.col(static_cast<int>(c)) = extract_quantity(
          T[static_cast<std::size_t>(keep[c])]->targets[static_cast<std::size_t>(region)],
          static_cast<Quantity>(q));
    data.Y.push_back(Y);
  }
  return data;
}

// --- on-disk formats ---

inline void save_loads_jsonl(const std::vector<LoadSample>& samples,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& sample : samples) {
    nlohmann::json doc;
    doc["id"] = sample.id;
    doc["scale"] = sample.scale;
    doc["pd"] = std::vector<double>(sample.pd.data(), sample.pd.data() + sample.pd.size());
    doc["qd"] = std::vector<double>(sample.qd.data(), sample.qd.data() + sample.qd.size());
    out << doc.dump() << "\n";
  }
}

inline std::vector<LoadSample> load_loads_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<LoadSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line);
    LoadSample sample;
    sample.id = doc.at("id").get<int>();
    sample.scale = doc.at("scale").get<double>();
    auto pd = doc.at("pd").get<std::vector<double>>();
    auto qd = doc.at("qd").get<std::vector<double>>();
    sample.pd = Eigen::Map<VectorXd>(pd.data(), static_cast<int>(pd.size()));
    sample.qd = Eigen::Map<VectorXd>(qd.data(), static_cast<int>(qd.size()));
    samples.push_back(std::move(sample));
  }
  return samples;
}

inline void save_region_jsonl(const std::vector<TrainingInstance>& instances,
                              const std::vector<RegionView>& views, int region,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& inst : instances) {
    if (!inst.feasible) continue;
    nlohmann::json doc;
    doc["id"] = inst.id;
    int nq = quantity_count(inst.two_level);
    for (int q = 0; q < nq; ++q) {
      VectorXd y = extract_quantity(inst.targets[static_cast<std::size_t>(region)],
                                    static_cast<Quantity>(q));
      doc["targets"][quantity_name(static_cast<Quantity>(q))] =
          std::vector<double>(y.data(), y.data() + y.size());
    }
    doc["rp"] = inst.rp_score[static_cast<std::size_t>(region)];
    doc["rd"] = inst.rd_score[static_cast<std::size_t>(region)];
    doc["sz"] = inst.sz_score[static_cast<std::size_t>(region)];
    out << doc.dump() << "\n";
  }
  (void)views;
}

inline void save_split(const SplitManifest& split, const std::string& path) {
  nlohmann::json doc;
  doc["train"] = split.train_ids;
  doc["test"] = split.test_ids;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << "\n";
}

inline SplitManifest load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  SplitManifest split;
  split.train_ids = doc.at("train").get<std::vector<int>>();
  split.test_ids = doc.at("test").get<std::vector<int>>();
  return split;
}

}  // namespace gridmm
