#pragma once

// Two-level consensus ADMM: slack variables on the coupling constraints,
// outer multipliers with a growing penalty, and the gated outer update.
// Initialization mirrors the one-level starts plus zeroed slack state.

#include "gridmm/admm.hpp"

namespace gridmm {

inline TwoLevelState two_level_cold_start(const PowerNetwork& net,
                                          const std::vector<RegionView>& views,
                                          double rho0 = 1000.0) {
  TwoLevelState st;
  static_cast<ConsensusState&>(st) = cold_start(net, views, rho0);
  st.tl.beta = 0.5 * rho0;
  return st;
}

// Warm start from per-region predictions of all 16 quantity types: the 8
// consensus/dual types plus the 8 slack/outer-dual types.
inline TwoLevelState two_level_warm_start(const PowerNetwork& net,
                                          const std::vector<RegionView>& views,
                                          const RegionTargets& predictions,
                                          double rho0 = 1000.0) {
  TwoLevelState st = two_level_cold_start(net, views, rho0);
  if (predictions.size() != views.size())
    throw std::invalid_argument("warm start needs predictions for every region");
  for (std::size_t k = 0; k < views.size(); ++k) {
    int dim = coupling_dim(views[k]);
    const CouplingTargets& tg = predictions[k];
    if (tg.cons.size() != dim || tg.lam.size() != dim || tg.z.size() != dim ||
        tg.Lam.size() != dim)
      throw std::invalid_argument(
          "two-level warm start for region " + views[k].region_id +
          " must provide consensus, dual, slack and outer-dual predictions");
    scatter_region_vector(st.cidx, static_cast<int>(k), tg.cons, st.cons_a, st.cons_b);
    scatter_region_vector(st.cidx, static_cast<int>(k), tg.lam, st.lam_a, st.lam_b);
    scatter_region_vector(st.cidx, static_cast<int>(k), tg.z, st.z_a, st.z_b);
    scatter_region_vector(st.cidx, static_cast<int>(k), tg.Lam, st.Lam_a, st.Lam_b);
  }
  return st;
}

inline AdmmTrace two_level_iterate(const PowerNetwork& net,
                                   const std::vector<RegionView>& views,
                                   const VectorXd& pd, const VectorXd& qd,
                                   TwoLevelState& st, const AdmmConfig& cfg,
                                   int t_max,
                                   const RegionExecutor& executor = sequential_executor,
                                   const EngineHooks& hooks = {}) {
  return admmdetail::run_core(net, views, pd, qd, st, &st.tl, cfg, t_max,
                              executor, hooks);
}

// Slack distance score of one region's slack vectors: the sum over the four
// component types of the largest absolute slack.
inline double slack_score(const ConsensusState& st, int region) {
  const auto& slots = st.cidx.region_slots[static_cast<std::size_t>(region)];
  double m[4] = {0, 0, 0, 0};
  for (std::size_t s = 0; s < slots.size(); ++s) {
    int entry = slots[s] / 8;
    bool is_a = st.cidx.entries[static_cast<std::size_t>(entry)].region_a == region;
    double z = (is_a ? st.z_a : st.z_b)[slots[s]];
    m[slots[s] % 4] = std::max(m[slots[s] % 4], std::abs(z));
  }
  return m[0] + m[1] + m[2] + m[3];
}

}  // namespace gridmm
