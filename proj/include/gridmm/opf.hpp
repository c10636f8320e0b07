#pragma once

// AC-OPF problem assembly in polar voltage coordinates. Builds NlpProblem
// instances for the centralized network and for regional subproblems whose
// coupling-branch consensus terms are relaxed into the objective with dual
// linear terms and a quadratic penalty (optionally shifted by slacks).

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gridmm/grid.hpp"
#include "gridmm/nlp.hpp"

namespace gridmm {

// A complex quantity split into components. Whichever representation was
// given is canonical; the other is derived from it.
struct ComplexSplit {
  enum class Tag { rect, polar };
  double re = 0.0, im = 0.0;
  double mag = 0.0, ang = 0.0;
  Tag tag = Tag::rect;

  static ComplexSplit from_rect(double re, double im) {
    ComplexSplit c;
    c.re = re;
    c.im = im;
    c.mag = std::hypot(re, im);
    c.ang = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
    c.tag = Tag::rect;
    return c;
  }
  static ComplexSplit from_polar(double mag, double ang) {
    ComplexSplit c;
    c.mag = mag;
    c.ang = ang;
    c.re = mag * std::cos(ang);
    c.im = mag * std::sin(ang);
    c.tag = Tag::polar;
    return c;
  }
};

// Flow S_ij = Y*|V_i|^2 - Y* V_i V_j^* leaving bus i over y = g + jb.
inline void branch_flow(double vi, double thi, double vj, double thj, double g,
                        double b, double& p, double& q) {
  double d = thi - thj;
  double c = std::cos(d), s = std::sin(d);
  p = g * vi * vi - vi * vj * (g * c + b * s);
  q = -b * vi * vi + vi * vj * (b * c - g * s);
}

namespace opfdetail {

// value, gradient and Hessian of (p,q) w.r.t. [vi, vj, thi, thj]
struct FlowDerivs {
  double p, q;
  double gp[4], gq[4];
  double hp[4][4], hq[4][4];
};

inline FlowDerivs flow_derivs(double vi, double thi, double vj, double thj,
                              double g, double b) {
  FlowDerivs f{};
  double d = thi - thj;
  double c = std::cos(d), s = std::sin(d);
  double A = g * c + b * s;   // dA/dthi = -g s + b c = -(g s - b c)
  double B = b * c - g * s;   // dB/dthi = -b s - g c
  double Ad = -g * s + b * c; // derivative of A in thi
  double Bd = -b * s - g * c; // derivative of B in thi

  f.p = g * vi * vi - vi * vj * A;
  f.q = -b * vi * vi + vi * vj * B;

  f.gp[0] = 2.0 * g * vi - vj * A;
  f.gp[1] = -vi * A;
  f.gp[2] = -vi * vj * Ad;
  f.gp[3] = vi * vj * Ad;

  f.gq[0] = -2.0 * b * vi + vj * B;
  f.gq[1] = vi * B;
  f.gq[2] = vi * vj * Bd;
  f.gq[3] = -vi * vj * Bd;

  // Hessian of p
  f.hp[0][0] = 2.0 * g;
  f.hp[0][1] = f.hp[1][0] = -A;
  f.hp[0][2] = f.hp[2][0] = -vj * Ad;
  f.hp[0][3] = f.hp[3][0] = vj * Ad;
  f.hp[1][1] = 0.0;
  f.hp[1][2] = f.hp[2][1] = -vi * Ad;
  f.hp[1][3] = f.hp[3][1] = vi * Ad;
  f.hp[2][2] = vi * vj * A;
  f.hp[2][3] = f.hp[3][2] = -vi * vj * A;
  f.hp[3][3] = vi * vj * A;

  // Hessian of q
  f.hq[0][0] = -2.0 * b;
  f.hq[0][1] = f.hq[1][0] = B;
  f.hq[0][2] = f.hq[2][0] = vj * Bd;
  f.hq[0][3] = f.hq[3][0] = -vj * Bd;
  f.hq[1][1] = 0.0;
  f.hq[1][2] = f.hq[2][1] = vi * Bd;
  f.hq[1][3] = f.hq[3][1] = -vi * Bd;
  f.hq[2][2] = -vi * vj * B;
  f.hq[2][3] = f.hq[3][2] = vi * vj * B;
  f.hq[3][3] = -vi * vj * B;
  return f;
}

}  // namespace opfdetail

inline double centralized_objective(const VectorXd& pg, const PowerNetwork& net) {
  double total = 0.0;
  for (int g = 0; g < static_cast<int>(net.generators.size()); ++g) {
    const Generator& gen = net.generators[static_cast<std::size_t>(g)];
    total += gen.c2 * pg[g] * pg[g] + gen.c1 * pg[g] + gen.c0;
  }
  return total;
}

// Variable layout of one regional subproblem:
//   [ v (buses), theta (buses), pg, qg (gens), pf, qf (directed branches) ]
// Buses are local buses then neighbor buses; directed branches are the two
// orientations of every local branch followed by those of every coupling
// branch, each in ascending network order.
struct RegionIndexing {
  RegionView view;
  std::vector<int> bus_list;            // network bus indices
  std::map<int, int> bus_pos;           // network bus -> position in bus_list
  struct DirBranch {
    int branch;  // network branch index
    int from, to;
    bool coupling;
  };
  std::vector<DirBranch> dbr;
  int n_local_bus = 0, nb = 0, ng = 0, ndir = 0;
  int off_v = 0, off_th = 0, off_pg = 0, off_qg = 0, off_pf = 0, off_qf = 0;
  int nvar = 0;
  int ref_pos = -1;  // position of the global reference bus, if local

  int var_v(int pos) const { return off_v + pos; }
  int var_th(int pos) const { return off_th + pos; }
  int var_pg(int gi) const { return off_pg + gi; }
  int var_qg(int gi) const { return off_qg + gi; }
  int var_pf(int di) const { return off_pf + di; }
  int var_qf(int di) const { return off_qf + di; }
};

inline RegionIndexing build_indexing(const PowerNetwork& net, const RegionView& view) {
  RegionIndexing ix;
  ix.view = view;
  ix.bus_list = view.local_buses;
  ix.n_local_bus = static_cast<int>(view.local_buses.size());
  ix.bus_list.insert(ix.bus_list.end(), view.neighbor_buses.begin(),
                     view.neighbor_buses.end());
  for (int p = 0; p < static_cast<int>(ix.bus_list.size()); ++p)
    ix.bus_pos[ix.bus_list[static_cast<std::size_t>(p)]] = p;

  auto add_branch = [&](int e, bool coupling) {
    const Branch& br = net.branches[static_cast<std::size_t>(e)];
    ix.dbr.push_back({e, br.from, br.to, coupling});
    ix.dbr.push_back({e, br.to, br.from, coupling});
  };
  for (int e : view.local_branches) add_branch(e, false);
  for (int e : view.coupling_branches) add_branch(e, true);

  ix.nb = static_cast<int>(ix.bus_list.size());
  ix.ng = static_cast<int>(view.local_generators.size());
  ix.ndir = static_cast<int>(ix.dbr.size());
  ix.off_v = 0;
  ix.off_th = ix.nb;
  ix.off_pg = 2 * ix.nb;
  ix.off_qg = 2 * ix.nb + ix.ng;
  ix.off_pf = 2 * ix.nb + 2 * ix.ng;
  ix.off_qf = 2 * ix.nb + 2 * ix.ng + ix.ndir;
  ix.nvar = 2 * ix.nb + 2 * ix.ng + 2 * ix.ndir;
  if (net.reference_bus >= 0) {
    auto it = ix.bus_pos.find(net.reference_bus);
    if (it != ix.bus_pos.end() && it->second < ix.n_local_bus)
      ix.ref_pos = it->second;
  }
  return ix;
}

// View covering the whole network as a single region with no couplings;
// assembling it yields the centralized problem.
inline RegionView whole_network_view(const PowerNetwork& net) {
  RegionView view;
  view.region = -1;
  view.region_id = "*";
  for (int i = 0; i < static_cast<int>(net.buses.size()); ++i)
    view.local_buses.push_back(i);
  for (int e = 0; e < static_cast<int>(net.branches.size()); ++e)
    view.local_branches.push_back(e);
  for (int g = 0; g < static_cast<int>(net.generators.size()); ++g)
    view.local_generators.push_back(g);
  for (int d = 0; d < static_cast<int>(net.loads.size()); ++d)
    view.local_loads.push_back(d);
  return view;
}

struct RegionalPrimal {
  VectorXd v, theta, pg, qg, pf, qf;

  static RegionalPrimal from_x(const RegionIndexing& ix, const VectorXd& x) {
    RegionalPrimal r;
    r.v = x.segment(ix.off_v, ix.nb);
    r.theta = x.segment(ix.off_th, ix.nb);
    r.pg = x.segment(ix.off_pg, ix.ng);
    r.qg = x.segment(ix.off_qg, ix.ng);
    r.pf = x.segment(ix.off_pf, ix.ndir);
    r.qf = x.segment(ix.off_qf, ix.ndir);
    return r;
  }
  VectorXd to_x(const RegionIndexing& ix) const {
    VectorXd x(ix.nvar);
    x.segment(ix.off_v, ix.nb) = v;
    x.segment(ix.off_th, ix.nb) = theta;
    x.segment(ix.off_pg, ix.ng) = pg;
    x.segment(ix.off_qg, ix.ng) = qg;
    x.segment(ix.off_pf, ix.ndir) = pf;
    x.segment(ix.off_qf, ix.ndir) = qf;
    return x;
  }
};

// Consensus-side inputs of one region: one value per coupling quantity.
// Layout: per coupling branch (ascending), 8 slots
//   [p_fw, q_fw, v_from, th_from, p_rv, q_rv, v_to, th_to].
// For one-level runs z and Lam stay zero-sized or zero-valued.
struct CouplingTargets {
  VectorXd cons;  // S^C / V^C components
  VectorXd lam;   // lambda duals
  VectorXd z;     // slacks (two-level)
  VectorXd Lam;   // outer duals (two-level)
};

inline int coupling_dim(const RegionView& view) {
  return 8 * static_cast<int>(view.coupling_branches.size());
}

enum class EngineMode { one_level, two_level };

// Map each coupling slot of the region onto its subproblem variable.
inline std::vector<int> coupling_slot_vars(const RegionIndexing& ix) {
  std::vector<int> vars;
  const int n_local_dir = 2 * static_cast<int>(ix.view.local_branches.size());
  for (int c = 0; c < static_cast<int>(ix.view.coupling_branches.size()); ++c) {
    for (int dir = 0; dir < 2; ++dir) {
      int di = n_local_dir + 2 * c + dir;
      int from_pos = ix.bus_pos.at(ix.dbr[static_cast<std::size_t>(di)].from);
      vars.push_back(ix.var_pf(di));
      vars.push_back(ix.var_qf(di));
      vars.push_back(ix.var_v(from_pos));
      vars.push_back(ix.var_th(from_pos));
    }
  }
  return vars;
}

// Augmented-Lagrangian regional subproblem. Loads are the full network
// load vectors; only the region's own entries are read. With an empty
// coupling set the result is exactly the regional restriction of the
// centralized model.
inline NlpProblem assemble_regional_problem(
    const PowerNetwork& net, const RegionIndexing& ix, const VectorXd& pd,
    const VectorXd& qd, const CouplingTargets& targets, double rho,
    EngineMode mode = EngineMode::one_level, double beta = 0.0,
    std::vector<std::string>* warnings = nullptr) {
  const int cdim = coupling_dim(ix.view);
  if (targets.cons.size() != cdim || targets.lam.size() != cdim)
    throw std::invalid_argument(
        "coupling targets do not match the region's coupling set: expected " +
        std::to_string(cdim) + " entries, got " + std::to_string(targets.cons.size()));
  if (mode == EngineMode::two_level) {
    if (targets.z.size() != cdim)
      throw std::invalid_argument("two-level assembly requires slack values");
    if (!(beta > 0.0)) throw std::invalid_argument("two-level assembly requires beta > 0");
  }
  VectorXd zvals = targets.z.size() == cdim ? targets.z : VectorXd::Zero(cdim);

  std::vector<int> slot_var = coupling_slot_vars(ix);

  // KCL bookkeeping: generators and outgoing directed branches per local bus
  std::vector<std::vector<int>> gens_at(static_cast<std::size_t>(ix.n_local_bus));
  for (int gi = 0; gi < ix.ng; ++gi) {
    int bus = net.generators[static_cast<std::size_t>(ix.view.local_generators[static_cast<std::size_t>(gi)])].bus;
    gens_at[static_cast<std::size_t>(ix.bus_pos.at(bus))].push_back(gi);
  }
  std::vector<std::vector<int>> out_at(static_cast<std::size_t>(ix.n_local_bus));
  for (int di = 0; di < ix.ndir; ++di) {
    auto it = ix.bus_pos.find(ix.dbr[static_cast<std::size_t>(di)].from);
    if (it != ix.bus_pos.end() && it->second < ix.n_local_bus)
      out_at[static_cast<std::size_t>(it->second)].push_back(di);
  }
  VectorXd bus_pd = VectorXd::Zero(ix.n_local_bus), bus_qd = VectorXd::Zero(ix.n_local_bus);
  for (int dl : ix.view.local_loads) {
    int pos = ix.bus_pos.at(net.loads[static_cast<std::size_t>(dl)].bus);
    bus_pd[pos] += pd[dl];
    bus_qd[pos] += qd[dl];
  }

  // KCL rows; isolated bus with zero load is dropped, nonzero load cannot balance
  std::vector<int> kcl_buses;
  for (int bpos = 0; bpos < ix.n_local_bus; ++bpos) {
    bool isolated = out_at[static_cast<std::size_t>(bpos)].empty() &&
                    gens_at[static_cast<std::size_t>(bpos)].empty();
    if (isolated) {
      if (bus_pd[bpos] != 0.0 || bus_qd[bpos] != 0.0)
        throw ValidationError(
            "bus " + net.buses[static_cast<std::size_t>(ix.bus_list[static_cast<std::size_t>(bpos)])].id +
            " has load but no branches or generators");
      if (warnings)
        warnings->push_back(
            "dropping balance rows of isolated bus " +
            net.buses[static_cast<std::size_t>(ix.bus_list[static_cast<std::size_t>(bpos)])].id);
      continue;
    }
    kcl_buses.push_back(bpos);
  }

  NlpProblem p;
  p.n = ix.nvar;
  p.lo = VectorXd::Constant(p.n, -nlpdetail::kInf);
  p.hi = VectorXd::Constant(p.n, nlpdetail::kInf);
  for (int bpos = 0; bpos < ix.n_local_bus; ++bpos) {
    const Bus& bus = net.buses[static_cast<std::size_t>(ix.bus_list[static_cast<std::size_t>(bpos)])];
    p.lo[ix.var_v(bpos)] = bus.vmin;
    p.hi[ix.var_v(bpos)] = bus.vmax;
  }
  for (int gi = 0; gi < ix.ng; ++gi) {
    const Generator& gen =
        net.generators[static_cast<std::size_t>(ix.view.local_generators[static_cast<std::size_t>(gi)])];
    p.lo[ix.var_pg(gi)] = gen.pmin;
    p.hi[ix.var_pg(gi)] = gen.pmax;
    p.lo[ix.var_qg(gi)] = gen.qmin;
    p.hi[ix.var_qg(gi)] = gen.qmax;
  }

  const int n_kcl = static_cast<int>(kcl_buses.size());
  p.num_eq = 2 * ix.ndir + 2 * n_kcl + (ix.ref_pos >= 0 ? 1 : 0);
  p.num_ineq = ix.ndir;

  struct Data {
    const PowerNetwork* net;
    RegionIndexing ix;
    std::vector<int> slot_var;
    VectorXd cons, lam, z;
    double rho;
    std::vector<std::vector<int>> gens_at, out_at;
    VectorXd bus_pd, bus_qd;
    std::vector<int> kcl_buses;
  };
  auto data = std::make_shared<Data>();
  data->net = &net;
  data->ix = ix;
  data->slot_var = slot_var;
  data->cons = targets.cons;
  data->lam = targets.lam;
  data->z = zvals;
  data->rho = rho;
  data->gens_at = gens_at;
  data->out_at = out_at;
  data->bus_pd = bus_pd;
  data->bus_qd = bus_qd;
  data->kcl_buses = kcl_buses;

  p.objective = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    double total = 0.0;
    for (int gi = 0; gi < ix.ng; ++gi) {
      const Generator& gen = data->net->generators[static_cast<std::size_t>(
          ix.view.local_generators[static_cast<std::size_t>(gi)])];
      double pg = x[ix.var_pg(gi)];
      total += gen.c2 * pg * pg + gen.c1 * pg + gen.c0;
    }
    for (int s = 0; s < static_cast<int>(data->slot_var.size()); ++s) {
      double dev = x[data->slot_var[static_cast<std::size_t>(s)]] - data->cons[s];
      total += data->lam[s] * dev;
      double shift = dev + data->z[s];
      total += 0.5 * data->rho * shift * shift;
    }
    return total;
  };
  p.gradient = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    VectorXd g = VectorXd::Zero(ix.nvar);
    for (int gi = 0; gi < ix.ng; ++gi) {
      const Generator& gen = data->net->generators[static_cast<std::size_t>(
          ix.view.local_generators[static_cast<std::size_t>(gi)])];
      g[ix.var_pg(gi)] += 2.0 * gen.c2 * x[ix.var_pg(gi)] + gen.c1;
    }
    for (int s = 0; s < static_cast<int>(data->slot_var.size()); ++s) {
      int var = data->slot_var[static_cast<std::size_t>(s)];
      double dev = x[var] - data->cons[s];
      g[var] += data->lam[s] + data->rho * (dev + data->z[s]);
    }
    return g;
  };

  p.eq = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    VectorXd c(2 * ix.ndir + 2 * static_cast<int>(data->kcl_buses.size()) +
               (ix.ref_pos >= 0 ? 1 : 0));
    int row = 0;
    for (int di = 0; di < ix.ndir; ++di) {
      const auto& d = ix.dbr[static_cast<std::size_t>(di)];
      const Branch& br = data->net->branches[static_cast<std::size_t>(d.branch)];
      int fp = ix.bus_pos.at(d.from), tp = ix.bus_pos.at(d.to);
      double pf, qf;
      branch_flow(x[ix.var_v(fp)], x[ix.var_th(fp)], x[ix.var_v(tp)],
                  x[ix.var_th(tp)], br.g, br.b, pf, qf);
      c[row++] = x[ix.var_pf(di)] - pf;
      c[row++] = x[ix.var_qf(di)] - qf;
    }
    for (int bpos : data->kcl_buses) {
      double psum = -data->bus_pd[bpos], qsum = -data->bus_qd[bpos];
      for (int gi : data->gens_at[static_cast<std::size_t>(bpos)]) {
        psum += x[ix.var_pg(gi)];
        qsum += x[ix.var_qg(gi)];
      }
      for (int di : data->out_at[static_cast<std::size_t>(bpos)]) {
        psum -= x[ix.var_pf(di)];
        qsum -= x[ix.var_qf(di)];
      }
      c[row++] = psum;
      c[row++] = qsum;
    }
    if (ix.ref_pos >= 0) c[row++] = x[ix.var_th(ix.ref_pos)];
    return c;
  };
  p.eq_jac = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    MatrixXd J = MatrixXd::Zero(
        2 * ix.ndir + 2 * static_cast<int>(data->kcl_buses.size()) +
            (ix.ref_pos >= 0 ? 1 : 0),
        ix.nvar);
    int row = 0;
    for (int di = 0; di < ix.ndir; ++di) {
      const auto& d = ix.dbr[static_cast<std::size_t>(di)];
      const Branch& br = data->net->branches[static_cast<std::size_t>(d.branch)];
      int fp = ix.bus_pos.at(d.from), tp = ix.bus_pos.at(d.to);
      auto fd = opfdetail::flow_derivs(x[ix.var_v(fp)], x[ix.var_th(fp)],
                                       x[ix.var_v(tp)], x[ix.var_th(tp)], br.g, br.b);
      int vars[4] = {ix.var_v(fp), ix.var_v(tp), ix.var_th(fp), ix.var_th(tp)};
      J(row, ix.var_pf(di)) = 1.0;
      for (int a = 0; a < 4; ++a) J(row, vars[a]) -= fd.gp[a];
      ++row;
      J(row, ix.var_qf(di)) = 1.0;
      for (int a = 0; a < 4; ++a) J(row, vars[a]) -= fd.gq[a];
      ++row;
    }
    for (int bpos : data->kcl_buses) {
      for (int gi : data->gens_at[static_cast<std::size_t>(bpos)]) {
        J(row, ix.var_pg(gi)) = 1.0;
        J(row + 1, ix.var_qg(gi)) = 1.0;
      }
      for (int di : data->out_at[static_cast<std::size_t>(bpos)]) {
        J(row, ix.var_pf(di)) = -1.0;
        J(row + 1, ix.var_qf(di)) = -1.0;
      }
      row += 2;
    }
    if (ix.ref_pos >= 0) J(row, ix.var_th(ix.ref_pos)) = 1.0;
    return J;
  };

  p.ineq = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    VectorXd c(ix.ndir);
    for (int di = 0; di < ix.ndir; ++di) {
      const Branch& br = data->net->branches[static_cast<std::size_t>(
          ix.dbr[static_cast<std::size_t>(di)].branch)];
      double pf = x[ix.var_pf(di)], qf = x[ix.var_qf(di)];
      c[di] = pf * pf + qf * qf - br.smax * br.smax;
    }
    return c;
  };
  p.ineq_jac = [data](const VectorXd& x) {
    const RegionIndexing& ix = data->ix;
    MatrixXd J = MatrixXd::Zero(ix.ndir, ix.nvar);
    for (int di = 0; di < ix.ndir; ++di) {
      J(di, ix.var_pf(di)) = 2.0 * x[ix.var_pf(di)];
      J(di, ix.var_qf(di)) = 2.0 * x[ix.var_qf(di)];
    }
    return J;
  };

  p.lag_hessian = [data](const VectorXd& x, double sigma, const VectorXd& y,
                         const VectorXd& w) {
    const RegionIndexing& ix = data->ix;
    MatrixXd H = MatrixXd::Zero(ix.nvar, ix.nvar);
    for (int gi = 0; gi < ix.ng; ++gi) {
      const Generator& gen = data->net->generators[static_cast<std::size_t>(
          ix.view.local_generators[static_cast<std::size_t>(gi)])];
      H(ix.var_pg(gi), ix.var_pg(gi)) += sigma * 2.0 * gen.c2;
    }
    for (int s = 0; s < static_cast<int>(data->slot_var.size()); ++s) {
      int var = data->slot_var[static_cast<std::size_t>(s)];
      H(var, var) += sigma * data->rho;
    }
    int row = 0;
    for (int di = 0; di < ix.ndir; ++di) {
      const auto& d = ix.dbr[static_cast<std::size_t>(di)];
      const Branch& br = data->net->branches[static_cast<std::size_t>(d.branch)];
      int fp = ix.bus_pos.at(d.from), tp = ix.bus_pos.at(d.to);
      auto fd = opfdetail::flow_derivs(x[ix.var_v(fp)], x[ix.var_th(fp)],
                                       x[ix.var_v(tp)], x[ix.var_th(tp)], br.g, br.b);
      int vars[4] = {ix.var_v(fp), ix.var_v(tp), ix.var_th(fp), ix.var_th(tp)};
      double yp = y[row], yq = y[row + 1];
      row += 2;
      for (int a = 0; a < 4; ++a)
        for (int bcol = 0; bcol < 4; ++bcol)
          H(vars[a], vars[bcol]) -= yp * fd.hp[a][bcol] + yq * fd.hq[a][bcol];
    }
    for (int di = 0; di < ix.ndir; ++di) {
      H(ix.var_pf(di), ix.var_pf(di)) += 2.0 * w[di];
      H(ix.var_qf(di), ix.var_qf(di)) += 2.0 * w[di];
    }
    return H;
  };

  // flat start
  p.x0 = VectorXd::Zero(p.n);
  for (int bpos = 0; bpos < ix.nb; ++bpos) p.x0[ix.var_v(bpos)] = 1.0;
  for (int gi = 0; gi < ix.ng; ++gi) {
    p.x0[ix.var_pg(gi)] = 0.5 * (p.lo[ix.var_pg(gi)] + p.hi[ix.var_pg(gi)]);
    p.x0[ix.var_qg(gi)] = 0.5 * (p.lo[ix.var_qg(gi)] + p.hi[ix.var_qg(gi)]);
  }
  return p;
}

// Centralized Model-1 assembly: the whole network as one region.
inline NlpProblem assemble_centralized_problem(const PowerNetwork& net,
                                               const RegionIndexing& ix,
                                               const VectorXd& pd, const VectorXd& qd) {
  CouplingTargets empty;
  empty.cons = VectorXd(0);
  empty.lam = VectorXd(0);
  return assemble_regional_problem(net, ix, pd, qd, empty, 1.0);
}

// Per-local-bus complex power mismatch of a candidate regional solution:
// generation minus load minus the sum of outgoing flow variables.
inline std::vector<std::pair<double, double>> evaluate_kcl_residual(
    const RegionalPrimal& primal, const PowerNetwork& net, const RegionIndexing& ix,
    const VectorXd& pd, const VectorXd& qd) {
  std::vector<std::pair<double, double>> mismatch(
      static_cast<std::size_t>(ix.n_local_bus), {0.0, 0.0});
  for (int gi = 0; gi < ix.ng; ++gi) {
    int bus = net.generators[static_cast<std::size_t>(
                                 ix.view.local_generators[static_cast<std::size_t>(gi)])]
                  .bus;
    int pos = ix.bus_pos.at(bus);
    mismatch[static_cast<std::size_t>(pos)].first += primal.pg[gi];
    mismatch[static_cast<std::size_t>(pos)].second += primal.qg[gi];
  }
  for (int dl : ix.view.local_loads) {
    int pos = ix.bus_pos.at(net.loads[static_cast<std::size_t>(dl)].bus);
    mismatch[static_cast<std::size_t>(pos)].first -= pd[dl];
    mismatch[static_cast<std::size_t>(pos)].second -= qd[dl];
  }
  for (int di = 0; di < ix.ndir; ++di) {
    auto it = ix.bus_pos.find(ix.dbr[static_cast<std::size_t>(di)].from);
    if (it == ix.bus_pos.end() || it->second >= ix.n_local_bus) continue;
    mismatch[static_cast<std::size_t>(it->second)].first -= primal.pf[di];
    mismatch[static_cast<std::size_t>(it->second)].second -= primal.qf[di];
  }
  return mismatch;
}

// Nominal load vectors of the network, indexed by load.
inline void nominal_loads(const PowerNetwork& net, VectorXd& pd, VectorXd& qd) {
  pd.resize(static_cast<int>(net.loads.size()));
  qd.resize(static_cast<int>(net.loads.size()));
  for (int d = 0; d < static_cast<int>(net.loads.size()); ++d) {
    pd[d] = net.loads[static_cast<std::size_t>(d)].pd;
    qd[d] = net.loads[static_cast<std::size_t>(d)].qd;
  }
}

}  // namespace gridmm
