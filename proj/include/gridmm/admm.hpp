#pragma once

// Consensus ADMM over regional AC-OPF subproblems: coupling bookkeeping,
// cold/warm initialization, the main iteration loop, primal/dual residuals,
// and trace export. The same core also runs the two-level variant; the
// one-level path is the special case with slacks pinned at zero.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gridmm/grid.hpp"
#include "gridmm/nlp.hpp"
#include "gridmm/opf.hpp"

namespace gridmm {

// Global coupling-quantity bookkeeping. Every coupling branch carries 8
// scalar quantities, laid out as in CouplingTargets:
//   [p_fw, q_fw, v_from, th_from, p_rv, q_rv, v_to, th_to]
// Side a of a branch is the region owning its from-bus.
struct CouplingIndex {
  struct Entry {
    int branch = -1;
    int region_a = -1;
    int region_b = -1;
  };
  std::vector<Entry> entries;            // ascending by branch index
  std::map<int, int> entry_of_branch;
  std::vector<std::vector<int>> region_slots;  // region -> global slots, 8 per owned branch

  int dim() const { return 8 * static_cast<int>(entries.size()); }
};

inline CouplingIndex build_coupling_index(const PowerNetwork& net,
                                          const std::vector<RegionView>& views) {
  CouplingIndex cidx;
  std::set<int> coupling;
  for (const auto& view : views)
    coupling.insert(view.coupling_branches.begin(), view.coupling_branches.end());
  for (int e : coupling) {
    CouplingIndex::Entry entry;
    entry.branch = e;
    entry.region_a = net.bus_region[static_cast<std::size_t>(
        net.branches[static_cast<std::size_t>(e)].from)];
    entry.region_b = net.bus_region[static_cast<std::size_t>(
        net.branches[static_cast<std::size_t>(e)].to)];
    cidx.entry_of_branch[e] = static_cast<int>(cidx.entries.size());
    cidx.entries.push_back(entry);
  }
  cidx.region_slots.resize(views.size());
  for (std::size_t k = 0; k < views.size(); ++k)
    for (int e : views[k].coupling_branches) {
      int base = 8 * cidx.entry_of_branch.at(e);
      for (int s = 0; s < 8; ++s) cidx.region_slots[k].push_back(base + s);
    }
  return cidx;
}

// Shared consensus/dual state. Each coupling quantity has two region-side
// copies of its consensus value and dual; the two-level slack and outer
// dual arrays stay zero in one-level runs.
struct ConsensusState {
  CouplingIndex cidx;
  VectorXd cons_a, cons_b;
  VectorXd lam_a, lam_b;
  VectorXd z_a, z_b;
  VectorXd Lam_a, Lam_b;
  double rho = 10.0;

  bool side_a(int region, int entry) const {
    return cidx.entries[static_cast<std::size_t>(entry)].region_a == region;
  }
};

// Knobs of the two-level scheme: outer penalty, its growth factor, and the
// slack-tolerance schedule gating the outer dual advance.
// Defaults follow the single-loop reading of the scheme: the outer criteria
// are checked every iteration and gated by a geometric tolerance with a
// floor, so beta stops growing once the slacks settle under the floor.
struct TwoLevelParams {
  double beta = 0.0;
  double c_beta = 2.0;
  int outer_period = 1;
  double eta0 = 1.0;
  double eta_gamma = 0.9;
  double eta_min = 3e-2;
};

struct TwoLevelState : ConsensusState {
  TwoLevelParams tl;
};

inline double eta_schedule(const TwoLevelParams& p, int t) {
  return std::max(p.eta_min,
                  p.eta0 * std::pow(p.eta_gamma,
                                    static_cast<double>(t) / p.outer_period));
}

// Outer update of the two-level scheme: per region, advance the outer duals
// when the region's stacked slack norm meets the schedule, otherwise grow
// beta and reset rho = 2 beta. Call only when the outer criteria hold.
inline void outer_update(ConsensusState& st, TwoLevelParams& p, int t) {
  double eta = eta_schedule(p, t);
  for (int k = 0; k < static_cast<int>(st.cidx.region_slots.size()); ++k) {
    VectorXd zk(static_cast<int>(st.cidx.region_slots[static_cast<std::size_t>(k)].size()));
    const auto& slots = st.cidx.region_slots[static_cast<std::size_t>(k)];
    for (std::size_t s = 0; s < slots.size(); ++s) {
      int entry = slots[s] / 8;
      bool is_a = st.cidx.entries[static_cast<std::size_t>(entry)].region_a == k;
      zk[static_cast<int>(s)] = (is_a ? st.z_a : st.z_b)[slots[s]];
    }
    if (zk.norm() <= eta) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        int entry = slots[s] / 8;
        bool is_a = st.cidx.entries[static_cast<std::size_t>(entry)].region_a == k;
        VectorXd& Lam = is_a ? st.Lam_a : st.Lam_b;
        VectorXd& z = is_a ? st.z_a : st.z_b;
        Lam[slots[s]] += p.beta * z[slots[s]];
      }
    } else {
      p.beta *= p.c_beta;
      st.rho = 2.0 * p.beta;
    }
  }
}

inline void outer_update(TwoLevelState& st, int t) { outer_update(st, st.tl, t); }

enum class RhoPolicy { constant, residual_balancing };

struct AdmmConfig {
  double rho0 = 10.0;
  int t_max = 500;
  bool early_stop = false;
  double eps = 1e-4;
  RhoPolicy rho_policy = RhoPolicy::constant;
  double rho_tau = 2.0;
  double rho_mu = 10.0;
  bool shared_consensus = true;    // coordinator averages the two side copies
  bool dual_step_uses_rho = true;  // the rho-free literal rule sits behind this flag
  bool freeze_slacks = false;      // two-level reduction mode
  SolverOptions solver;
  std::function<bool(int)> stop_requested;  // polled once per iteration
};

struct IterRecord {
  int iter = 0;
  std::vector<double> region_objective;
  std::vector<double> wall_ms;
  VectorXd r_p, r_d;
  VectorXd consensus;  // canonical post-update snapshot
  double rp_inf = 0, rp_l2 = 0, rd_inf = 0, rd_l2 = 0;
  double rho = 0;
  double z_inf = 0, z_l2 = 0, beta = 0;
  std::vector<double> region_slack_score;  // two-level only
};

struct AdmmTrace {
  std::vector<IterRecord> iters;
  bool two_level = false;
  SolveStatus status = SolveStatus::converged;
  int failed_region = -1;
  std::string error;
};

// --- update rules (Algorithm arithmetic, shared by both engines) ---

inline double consensus_update(double consensus, double local) {
  return (consensus + local) / 2.0;
}

inline double slack_update(double Lam, double lam, double rho, double beta,
                           double local_minus_consensus) {
  return (-Lam - lam - rho * local_minus_consensus) / (beta + rho);
}

inline double two_level_dual_update(double lam, double rho, double local,
                                    double consensus, double z) {
  return lam + rho * (local - consensus + z);
}

inline VectorXd primal_residual(const VectorXd& values_a, const VectorXd& values_b) {
  return values_a - values_b;
}

inline VectorXd dual_residual(const VectorXd& cons_now, const VectorXd& cons_prev,
                              double rho) {
  // sign structure of A^T B with A = I, B = -I in the copy formulation
  return -rho * (cons_now - cons_prev);
}

inline double update_rho(double rho, double rp_norm, double rd_norm,
                         RhoPolicy policy, double tau = 2.0, double mu = 10.0) {
  if (policy == RhoPolicy::constant) return rho;
  if (rp_norm > mu * rd_norm) return rho * tau;
  if (rd_norm > mu * rp_norm) return rho / tau;
  return rho;
}

// --- initialization ---

inline ConsensusState cold_start(const PowerNetwork& net,
                                 const std::vector<RegionView>& views,
                                 double rho0 = 10.0) {
  ConsensusState st;
  st.cidx = build_coupling_index(net, views);
  int dim = st.cidx.dim();
  st.cons_a = VectorXd::Zero(dim);
  st.cons_b = VectorXd::Zero(dim);
  for (int c = 0; c < static_cast<int>(st.cidx.entries.size()); ++c) {
    st.cons_a[8 * c + 2] = 1.0;  // nominal voltage magnitude
    st.cons_a[8 * c + 6] = 1.0;
    st.cons_b[8 * c + 2] = 1.0;
    st.cons_b[8 * c + 6] = 1.0;
  }
  st.lam_a = VectorXd::Zero(dim);
  st.lam_b = VectorXd::Zero(dim);
  st.z_a = VectorXd::Zero(dim);
  st.z_b = VectorXd::Zero(dim);
  st.Lam_a = VectorXd::Zero(dim);
  st.Lam_b = VectorXd::Zero(dim);
  st.rho = rho0;
  return st;
}

// Per-region predictions (or recorded ground truth) for warm starts.
using RegionTargets = std::vector<CouplingTargets>;  // by region index

inline void scatter_region_vector(const CouplingIndex& cidx, int region,
                                  const VectorXd& local, VectorXd& side_a,
                                  VectorXd& side_b) {
  const auto& slots = cidx.region_slots[static_cast<std::size_t>(region)];
  for (std::size_t s = 0; s < slots.size(); ++s) {
    int entry = slots[s] / 8;
    bool is_a = cidx.entries[static_cast<std::size_t>(entry)].region_a == region;
    (is_a ? side_a : side_b)[slots[s]] = local[static_cast<int>(s)];
  }
}

inline VectorXd gather_region_vector(const CouplingIndex& cidx, int region,
                                     const VectorXd& side_a, const VectorXd& side_b) {
  const auto& slots = cidx.region_slots[static_cast<std::size_t>(region)];
  VectorXd local(static_cast<int>(slots.size()));
  for (std::size_t s = 0; s < slots.size(); ++s) {
    int entry = slots[s] / 8;
    bool is_a = cidx.entries[static_cast<std::size_t>(entry)].region_a == region;
    local[static_cast<int>(s)] = (is_a ? side_a : side_b)[slots[s]];
  }
  return local;
}

inline ConsensusState warm_start(const PowerNetwork& net,
                                 const std::vector<RegionView>& views,
                                 const RegionTargets& predictions,
                                 double rho0 = 10.0) {
  ConsensusState st = cold_start(net, views, rho0);
  if (predictions.size() != views.size())
    throw std::invalid_argument("warm start needs predictions for every region");
  for (std::size_t k = 0; k < views.size(); ++k) {
    int dim = coupling_dim(views[k]);
    if (predictions[k].cons.size() != dim || predictions[k].lam.size() != dim)
      throw std::invalid_argument("warm-start predictions for region " +
                                  views[k].region_id +
                                  " do not cover its coupling branches");
    scatter_region_vector(st.cidx, static_cast<int>(k), predictions[k].cons,
                          st.cons_a, st.cons_b);
    scatter_region_vector(st.cidx, static_cast<int>(k), predictions[k].lam,
                          st.lam_a, st.lam_b);
  }
  return st;
}

// Extract region k's solve inputs from the state.
inline CouplingTargets region_targets(const ConsensusState& st, int region,
                                      bool two_level) {
  CouplingTargets tg;
  tg.cons = gather_region_vector(st.cidx, region, st.cons_a, st.cons_b);
  tg.lam = gather_region_vector(st.cidx, region, st.lam_a, st.lam_b);
  tg.z = gather_region_vector(st.cidx, region, st.z_a, st.z_b);
  if (two_level)
    tg.Lam = gather_region_vector(st.cidx, region, st.Lam_a, st.Lam_b);
  return tg;
}

// --- the engine core ---

struct RegionStep {
  VectorXd coupling_values;  // regional slot layout
  double objective = 0.0;    // generation cost
  double wall_ms = 0.0;
  SolveStatus status = SolveStatus::failure;
  VectorXd x;  // full primal, reused as the next warm start
};

struct EngineHooks {
  std::function<void(int, int, const CouplingTargets&)> on_solve_request;
  std::function<void(int, int, const RegionStep&)> on_solve_result;
  std::function<void(int, const VectorXd&)> on_consensus_broadcast;
};

// Runs the regional solves of one iteration. tasks[k] must be invoked for
// every region exactly once; implementations may run them concurrently.
using RegionExecutor = std::function<void(std::vector<std::function<void()>>&)>;

inline void sequential_executor(std::vector<std::function<void()>>& tasks) {
  for (auto& task : tasks) task();
}

namespace admmdetail {

struct RegionRuntime {
  RegionIndexing ix;
  std::vector<int> slot_vars;
  VectorXd warm_x;
  bool has_warm = false;
};

inline std::vector<RegionRuntime> make_runtimes(const PowerNetwork& net,
                                                const std::vector<RegionView>& views) {
  std::vector<RegionRuntime> rts;
  rts.reserve(views.size());
  for (const auto& view : views) {
    RegionRuntime rt;
    rt.ix = build_indexing(net, view);
    rt.slot_vars = coupling_slot_vars(rt.ix);
    rts.push_back(std::move(rt));
  }
  return rts;
}

inline RegionStep solve_region(const PowerNetwork& net, RegionRuntime& rt,
                               const VectorXd& pd, const VectorXd& qd,
                               const CouplingTargets& tg, double rho,
                               EngineMode mode, double beta,
                               const SolverOptions& sopt) {
  RegionStep step;
  auto t0 = std::chrono::steady_clock::now();
  NlpProblem prob = assemble_regional_problem(net, rt.ix, pd, qd, tg, rho, mode, beta);
  if (rt.has_warm) prob.x0 = rt.warm_x;
  NlpSolution sol = solve(prob, sopt);
  step.status = sol.status;
  step.x = sol.x;
  step.coupling_values.resize(static_cast<int>(rt.slot_vars.size()));
  for (std::size_t s = 0; s < rt.slot_vars.size(); ++s)
    step.coupling_values[static_cast<int>(s)] = sol.x[rt.slot_vars[s]];
  double cost = 0.0;
  for (int gi = 0; gi < rt.ix.ng; ++gi) {
    const Generator& gen = net.generators[static_cast<std::size_t>(
        rt.ix.view.local_generators[static_cast<std::size_t>(gi)])];
    double pg = sol.x[rt.ix.var_pg(gi)];
    cost += gen.c2 * pg * pg + gen.c1 * pg + gen.c0;
  }
  step.objective = cost;
  step.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return step;
}

// Full consensus loop. `tl` selects the two-level scheme; the one-level
// path runs the identical statements with z and Lam pinned at zero.
inline AdmmTrace run_core(const PowerNetwork& net,
                          const std::vector<RegionView>& views, const VectorXd& pd,
                          const VectorXd& qd, ConsensusState& st,
                          TwoLevelParams* tl, const AdmmConfig& cfg, int t_max,
                          const RegionExecutor& executor = sequential_executor,
                          const EngineHooks& hooks = {}) {
  const int nregion = static_cast<int>(views.size());
  const int dim = st.cidx.dim();
  AdmmTrace trace;
  trace.two_level = tl != nullptr;
  auto rts = make_runtimes(net, views);
  const EngineMode mode = tl ? EngineMode::two_level : EngineMode::one_level;

  VectorXd canonical_prev(dim);
  for (int s = 0; s < dim; ++s) canonical_prev[s] = 0.5 * (st.cons_a[s] + st.cons_b[s]);

  for (int t = 1; t <= t_max; ++t) {
    if (cfg.stop_requested && cfg.stop_requested(t)) break;

    // snapshot of the consensus/duals each region sees this iteration
    std::vector<CouplingTargets> inputs(static_cast<std::size_t>(nregion));
    for (int k = 0; k < nregion; ++k) {
      inputs[static_cast<std::size_t>(k)] = region_targets(st, k, tl != nullptr);
      if (hooks.on_solve_request)
        hooks.on_solve_request(t, k, inputs[static_cast<std::size_t>(k)]);
    }

    std::vector<RegionStep> steps(static_cast<std::size_t>(nregion));
    std::vector<std::function<void()>> tasks;
    double rho_t = st.rho;
    double beta_t = tl ? tl->beta : 0.0;
    for (int k = 0; k < nregion; ++k)
      tasks.push_back([&, k]() {
        steps[static_cast<std::size_t>(k)] =
            solve_region(net, rts[static_cast<std::size_t>(k)], pd, qd,
                         inputs[static_cast<std::size_t>(k)], rho_t, mode, beta_t,
                         cfg.solver);
      });
    executor(tasks);

    for (int k = 0; k < nregion; ++k) {
      const RegionStep& step = steps[static_cast<std::size_t>(k)];
      if (hooks.on_solve_result) hooks.on_solve_result(t, k, step);
      if (step.status == SolveStatus::failure) {
        trace.status = SolveStatus::failure;
        trace.failed_region = k;
        trace.error = "regional solve failed in region " + views[static_cast<std::size_t>(k)].region_id +
                      " at iteration " + std::to_string(t);
        return trace;
      }
      rts[static_cast<std::size_t>(k)].warm_x = step.x;
      rts[static_cast<std::size_t>(k)].has_warm = true;
    }

    // gather both side copies of every coupling quantity
    VectorXd values_a = VectorXd::Zero(dim), values_b = VectorXd::Zero(dim);
    for (int k = 0; k < nregion; ++k)
      scatter_region_vector(st.cidx, k, steps[static_cast<std::size_t>(k)].coupling_values,
                            values_a, values_b);

    // slack updates always run against the consensus the solves used
    if (tl && !cfg.freeze_slacks) {
      for (int side = 0; side < 2; ++side) {
        const VectorXd& vals = side == 0 ? values_a : values_b;
        const VectorXd& cons = side == 0 ? st.cons_a : st.cons_b;
        const VectorXd& lam = side == 0 ? st.lam_a : st.lam_b;
        const VectorXd& Lam = side == 0 ? st.Lam_a : st.Lam_b;
        VectorXd& z = side == 0 ? st.z_a : st.z_b;
        for (int s = 0; s < dim; ++s)
          z[s] = slack_update(Lam[s], lam[s], st.rho, tl->beta, vals[s] - cons[s]);
      }
    }
    if (cfg.shared_consensus) {
      // coordinator consensus: exact minimizer of the augmented Lagrangian
      // consensus block, mean(x + z) + mean(lambda)/rho. It keeps the two
      // side duals summing to zero and equals the plain two-copy average
      // once they do; dual updates then measure against it.
      for (int s = 0; s < dim; ++s) {
        double mean = 0.5 * (values_a[s] + st.z_a[s] + values_b[s] + st.z_b[s]);
        if (st.rho > 0.0) mean += 0.5 * (st.lam_a[s] + st.lam_b[s]) / st.rho;
        st.cons_a[s] = mean;
        st.cons_b[s] = mean;
      }
      double step_rho = cfg.dual_step_uses_rho ? st.rho : 1.0;
      for (int s = 0; s < dim; ++s) {
        st.lam_a[s] = two_level_dual_update(st.lam_a[s], step_rho, values_a[s],
                                            st.cons_a[s], st.z_a[s]);
        st.lam_b[s] = two_level_dual_update(st.lam_b[s], step_rho, values_b[s],
                                            st.cons_b[s], st.z_b[s]);
      }
    } else {
      // literal per-region rule: dual step against the old consensus, then
      // each side averages its own copy; the copies may diverge
      for (int side = 0; side < 2; ++side) {
        const VectorXd& vals = side == 0 ? values_a : values_b;
        VectorXd& cons = side == 0 ? st.cons_a : st.cons_b;
        VectorXd& lam = side == 0 ? st.lam_a : st.lam_b;
        const VectorXd& z = side == 0 ? st.z_a : st.z_b;
        double step_rho = cfg.dual_step_uses_rho ? st.rho : 1.0;
        for (int s = 0; s < dim; ++s)
          lam[s] = two_level_dual_update(lam[s], step_rho, vals[s], cons[s], z[s]);
        for (int s = 0; s < dim; ++s)
          cons[s] = consensus_update(cons[s], vals[s]);
      }
    }
    VectorXd canonical(dim);
    for (int s = 0; s < dim; ++s) canonical[s] = 0.5 * (st.cons_a[s] + st.cons_b[s]);
    if (hooks.on_consensus_broadcast) hooks.on_consensus_broadcast(t, canonical);

    IterRecord rec;
    rec.iter = t;
    rec.rho = st.rho;
    for (int k = 0; k < nregion; ++k) {
      rec.region_objective.push_back(steps[static_cast<std::size_t>(k)].objective);
      rec.wall_ms.push_back(steps[static_cast<std::size_t>(k)].wall_ms);
    }
    rec.r_p = primal_residual(values_a, values_b);
    rec.r_d = dual_residual(canonical, canonical_prev, st.rho);
    rec.consensus = canonical;
    rec.rp_inf = rec.r_p.size() ? rec.r_p.lpNorm<Eigen::Infinity>() : 0.0;
    rec.rp_l2 = rec.r_p.norm();
    rec.rd_inf = rec.r_d.size() ? rec.r_d.lpNorm<Eigen::Infinity>() : 0.0;
    rec.rd_l2 = rec.r_d.norm();
    canonical_prev = canonical;

    if (tl && !cfg.freeze_slacks && tl->outer_period > 0 &&
        t % tl->outer_period == 0) {
      outer_update(st, *tl, t);
    } else if (!tl) {
      st.rho = update_rho(st.rho, rec.rp_l2, rec.rd_l2, cfg.rho_policy,
                          cfg.rho_tau, cfg.rho_mu);
    }

    if (tl) {
      VectorXd zall(2 * dim);
      zall << st.z_a, st.z_b;
      rec.z_inf = zall.size() ? zall.lpNorm<Eigen::Infinity>() : 0.0;
      rec.z_l2 = zall.norm();
      rec.beta = tl->beta;
      for (int k = 0; k < nregion; ++k) {
        const auto& slots = st.cidx.region_slots[static_cast<std::size_t>(k)];
        double m[4] = {0, 0, 0, 0};
        for (std::size_t s = 0; s < slots.size(); ++s) {
          int entry = slots[s] / 8;
          bool is_a = st.cidx.entries[static_cast<std::size_t>(entry)].region_a == k;
          double zv = (is_a ? st.z_a : st.z_b)[slots[s]];
          m[slots[s] % 4] = std::max(m[slots[s] % 4], std::abs(zv));
        }
        rec.region_slack_score.push_back(m[0] + m[1] + m[2] + m[3]);
      }
    }
    trace.iters.push_back(std::move(rec));

    if (cfg.early_stop &&
        std::max(trace.iters.back().rp_inf, trace.iters.back().rd_inf) < cfg.eps)
      break;
  }
  return trace;
}

}  // namespace admmdetail

// One-level ADMM main loop (cold or warm state prepared by the caller).
inline AdmmTrace admm_iterate(const PowerNetwork& net,
                              const std::vector<RegionView>& views,
                              const VectorXd& pd, const VectorXd& qd,
                              ConsensusState& st, const AdmmConfig& cfg, int t_max,
                              const RegionExecutor& executor = sequential_executor,
                              const EngineHooks& hooks = {}) {
  return admmdetail::run_core(net, views, pd, qd, st, nullptr, cfg, t_max,
                              executor, hooks);
}

// Total objective (sum of regional generation costs) at an iteration.
inline double trace_total_objective(const IterRecord& rec) {
  double total = 0.0;
  for (double obj : rec.region_objective) total += obj;
  return total;
}

inline void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

// Per-(iteration, region) trace rows. Region residual norms cover only the
// region's own coupling slots. Wall times are inherently non-deterministic;
// exports meant for byte comparison pass include_wall = false.
inline std::string trace_to_csv(const AdmmTrace& trace,
                                const std::vector<RegionView>& views,
                                const CouplingIndex& cidx,
                                bool include_wall = true) {
  std::string out = "iter,region,objective,rp_inf,rd_inf,rp_l2,rd_l2";
  if (include_wall) out += ",wall_ms";
  if (trace.two_level) out += ",z_inf,z_l2,beta";
  out += "\n";
  for (const auto& rec : trace.iters) {
    for (std::size_t k = 0; k < views.size(); ++k) {
      const auto& slots = cidx.region_slots[k];
      double rpi = 0, rdi = 0, rp2 = 0, rd2 = 0;
      for (int slot : slots) {
        rpi = std::max(rpi, std::abs(rec.r_p[slot]));
        rdi = std::max(rdi, std::abs(rec.r_d[slot]));
        rp2 += rec.r_p[slot] * rec.r_p[slot];
        rd2 += rec.r_d[slot] * rec.r_d[slot];
      }
      out += std::to_string(rec.iter) + "," + views[k].region_id + ",";
      format_double(out, rec.region_objective[k]);
      out += ",";
      format_double(out, rpi);
      out += ",";
      format_double(out, rdi);
      out += ",";
      format_double(out, std::sqrt(rp2));
      out += ",";
      format_double(out, std::sqrt(rd2));
      if (include_wall) {
        out += ",";
        format_double(out, rec.wall_ms[k]);
      }
      if (trace.two_level) {
        out += ",";
        format_double(out, rec.z_inf);
        out += ",";
        format_double(out, rec.z_l2);
        out += ",";
        format_double(out, rec.beta);
      }
      out += "\n";
    }
  }
  return out;
}

inline void export_trace_csv(const AdmmTrace& trace,
                             const std::vector<RegionView>& views,
                             const CouplingIndex& cidx, const std::string& path,
                             bool include_wall = true) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << trace_to_csv(trace, views, cidx, include_wall);
}

}  // namespace gridmm
