#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "gridmm/grid.hpp"
#include "gridmm/nlp.hpp"
#include "gridmm/opf.hpp"
#include "test_util.hpp"

using namespace gridmm;

namespace {

// independent complex-arithmetic route: S = Y* |Vi|^2 - Y* Vi Vj*
std::pair<double, double> flow_via_complex(double vi, double thi, double vj,
                                           double thj, double g, double b) {
  std::complex<double> Y(g, b);
  std::complex<double> Vi = std::polar(vi, thi);
  std::complex<double> Vj = std::polar(vj, thj);
  std::complex<double> S =
      std::conj(Y) * (std::norm(Vi) - Vi * std::conj(Vj));
  return {S.real(), S.imag()};
}

double uni(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

TEST_CASE("branch flow basics") {
  double p, q;
  branch_flow(1.0, 0.0, 1.0, 0.0, 3.1, -9.2, p, q);
  CHECK(p == 0.0);
  CHECK(q == 0.0);

  branch_flow(1.0, 0.0, 0.9, 0.0, 1.0, 0.0, p, q);
  CHECK(std::abs(p - 0.1) < 1e-15);
  CHECK(std::abs(q) < 1e-15);
}

TEST_CASE("branch flow matches direct complex arithmetic") {
  double p, q;
  branch_flow(1.02, 0.05, 0.98, 0.0, 2.0, -8.0, p, q);
  auto [pe, qe] = flow_via_complex(1.02, 0.05, 0.98, 0.0, 2.0, -8.0);
  CHECK(std::abs(p - pe) < 1e-12);
  CHECK(std::abs(q - qe) < 1e-12);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    double vi = uni(rng, 0.85, 1.15), vj = uni(rng, 0.85, 1.15);
    double thi = uni(rng, -0.5, 0.5), thj = uni(rng, -0.5, 0.5);
    double g = uni(rng, 0.1, 5.0), b = uni(rng, -15.0, -0.1);
    branch_flow(vi, thi, vj, thj, g, b, p, q);
    auto [pr, qr] = flow_via_complex(vi, thi, vj, thj, g, b);
    CHECK(std::abs(p - pr) < 1e-12);
    CHECK(std::abs(q - qr) < 1e-12);
  }
}

TEST_CASE("lossless branches have antisymmetric active flow") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    double vi = uni(rng, 0.9, 1.1), vj = uni(rng, 0.9, 1.1);
    double thi = uni(rng, -0.4, 0.4), thj = uni(rng, -0.4, 0.4);
    double b = uni(rng, -12.0, -1.0);
    double pij, qij, pji, qji;
    branch_flow(vi, thi, vj, thj, 0.0, b, pij, qij);
    branch_flow(vj, thj, vi, thi, 0.0, b, pji, qji);
    CHECK(std::abs(pij + pji) < 1e-12);
  }
}

TEST_CASE("flow derivatives agree with finite differences") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 30; ++t) {
    double vi = uni(rng, 0.9, 1.1), vj = uni(rng, 0.9, 1.1);
    double thi = uni(rng, -0.3, 0.3), thj = uni(rng, -0.3, 0.3);
    double g = uni(rng, 0.5, 4.0), b = uni(rng, -12.0, -1.0);
    auto fd = opfdetail::flow_derivs(vi, thi, vj, thj, g, b);
    double vars[4] = {vi, vj, thi, thj};
    const double h = 1e-6;
    for (int a = 0; a < 4; ++a) {
      double save = vars[a];
      auto eval = [&](double delta) {
        double vv[4] = {vars[0], vars[1], vars[2], vars[3]};
        vv[a] = save + delta;
        double p, q;
        branch_flow(vv[0], vv[2], vv[1], vv[3], g, b, p, q);
        return std::make_pair(p, q);
      };
      auto [pp, qp] = eval(h);
      auto [pm, qm] = eval(-h);
      CHECK(std::abs((pp - pm) / (2 * h) - fd.gp[a]) < 1e-6);
      CHECK(std::abs((qp - qm) / (2 * h) - fd.gq[a]) < 1e-6);
      // second derivatives via gradient differences
      auto grads = [&](double delta) {
        double vv[4] = {vars[0], vars[1], vars[2], vars[3]};
        vv[a] = save + delta;
        return opfdetail::flow_derivs(vv[0], vv[2], vv[1], vv[3], g, b);
      };
      auto gp = grads(h);
      auto gm = grads(-h);
      for (int c = 0; c < 4; ++c) {
        CHECK(std::abs((gp.gp[c] - gm.gp[c]) / (2 * h) - fd.hp[a][c]) < 1e-5);
        CHECK(std::abs((gp.gq[c] - gm.gq[c]) / (2 * h) - fd.hq[a][c]) < 1e-5);
      }
    }
  }
}

TEST_CASE("centralized objective") {
  PowerNetwork net;
  for (int i = 0; i < 3; ++i) {
    Generator gen;
    gen.c2 = 0.0;
    gen.c1 = 0.0;
    gen.c0 = 5.0;
    net.generators.push_back(gen);
  }
  CHECK(centralized_objective(VectorXd::Zero(3), net) == 15.0);

  PowerNetwork one;
  Generator gen;
  gen.c2 = 1.0;
  gen.c1 = 2.0;
  gen.c0 = 0.0;
  one.generators.push_back(gen);
  CHECK(centralized_objective(VectorXd::Constant(1, 3.0), one) == 15.0);

  // independent plain summation
  std::mt19937_64 rng(8);
  PowerNetwork many;
  VectorXd pg(7);
  double expect = 0.0;
  for (int i = 0; i < 7; ++i) {
    Generator g2;
    g2.c2 = uni(rng, 0.0, 0.2);
    g2.c1 = uni(rng, 1.0, 10.0);
    g2.c0 = uni(rng, 0.0, 3.0);
    many.generators.push_back(g2);
    pg[i] = uni(rng, 0.0, 2.0);
    expect += g2.c2 * pg[i] * pg[i] + g2.c1 * pg[i] + g2.c0;
  }
  CHECK(std::abs(centralized_objective(pg, many) - expect) < 1e-12);
}

TEST_CASE("complex split representations stay consistent") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    double re = uni(rng, -3, 3), im = uni(rng, -3, 3);
    auto c = ComplexSplit::from_rect(re, im);
    CHECK(std::abs(c.re - c.mag * std::cos(c.ang)) < 1e-12);
    CHECK(std::abs(c.im - c.mag * std::sin(c.ang)) < 1e-12);
    auto p = ComplexSplit::from_polar(c.mag, c.ang);
    CHECK(std::abs(p.re - re) < 1e-12);
    CHECK(std::abs(p.im - im) < 1e-12);
  }
}

namespace {

struct FixtureSetup {
  PowerNetwork net;
  std::vector<RegionView> views;
  VectorXd pd, qd;
  FixtureSetup() {
    net = load_network(testutil::data_path("case6_2region.json"));
    views = partition(net);
    nominal_loads(net, pd, qd);
  }
};

CouplingTargets zero_targets(const RegionView& view, bool two_level = false) {
  CouplingTargets tg;
  int dim = coupling_dim(view);
  tg.cons = VectorXd::Zero(dim);
  tg.lam = VectorXd::Zero(dim);
  if (two_level) {
    tg.z = VectorXd::Zero(dim);
    tg.Lam = VectorXd::Zero(dim);
  }
  return tg;
}

}  // namespace

TEST_CASE("region without couplings reduces to plain cost") {
  nlohmann::json doc = nlohmann::json::parse(R"({
    "base_mva": 100.0,
    "buses": [
      {"id": "a", "vmin": 0.9, "vmax": 1.1, "region": "R", "reference": true},
      {"id": "b", "vmin": 0.9, "vmax": 1.1, "region": "R"}
    ],
    "branches": [{"from": "a", "to": "b", "g": 2.0, "b": -8.0, "smax": 1.0}],
    "generators": [{"bus": "a", "pmin": 0, "pmax": 1, "qmin": -1, "qmax": 1, "cost": [0.2, 4.0, 1.0]}],
    "loads": [{"bus": "b", "pd": 0.2, "qd": 0.05}]
  })");
  PowerNetwork net = parse_network(doc);
  auto views = partition(net);
  RegionIndexing ix = build_indexing(net, views[0]);
  VectorXd pd, qd;
  nominal_loads(net, pd, qd);
  NlpProblem p = assemble_regional_problem(net, ix, pd, qd, zero_targets(views[0]), 10.0);

  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    VectorXd x = VectorXd::Zero(p.n);
    for (int j = 0; j < p.n; ++j) x[j] = uni(rng, -1.0, 1.0);
    double pg = x[ix.var_pg(0)];
    double expect = 0.2 * pg * pg + 4.0 * pg + 1.0;
    CHECK(std::abs(p.objective(x) - expect) < 1e-12);
  }
}

TEST_CASE("vanishing penalty and duals leave only generation cost") {
  FixtureSetup fx;
  RegionIndexing ix = build_indexing(fx.net, fx.views[0]);
  NlpProblem p = assemble_regional_problem(fx.net, ix, fx.pd, fx.qd,
                                           zero_targets(fx.views[0]), 0.0);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    VectorXd x = VectorXd::Zero(p.n);
    for (int j = 0; j < p.n; ++j) x[j] = uni(rng, -1.0, 1.0);
    double expect = 0.0;
    for (int gi = 0; gi < ix.ng; ++gi) {
      const Generator& gen = fx.net.generators[static_cast<std::size_t>(
          fx.views[0].local_generators[static_cast<std::size_t>(gi)])];
      double pg = x[ix.var_pg(gi)];
      expect += gen.c2 * pg * pg + gen.c1 * pg + gen.c0;
    }
    CHECK(std::abs(p.objective(x) - expect) < 1e-12);
  }
}

TEST_CASE("dimension mismatch between targets and couplings is rejected") {
  FixtureSetup fx;
  RegionIndexing ix = build_indexing(fx.net, fx.views[0]);
  CouplingTargets bad;
  bad.cons = VectorXd::Zero(3);
  bad.lam = VectorXd::Zero(3);
  CHECK_THROWS_AS(
      assemble_regional_problem(fx.net, ix, fx.pd, fx.qd, bad, 10.0),
      std::invalid_argument);
}

TEST_CASE("assembled objective gradient matches finite differences") {
  FixtureSetup fx;
  RegionIndexing ix = build_indexing(fx.net, fx.views[0]);
  std::mt19937_64 rng(12);
  CouplingTargets tg = zero_targets(fx.views[0]);
  for (int s = 0; s < tg.cons.size(); ++s) {
    tg.cons[s] = uni(rng, -0.5, 0.5);
    tg.lam[s] = uni(rng, -2.0, 2.0);
  }
  NlpProblem p = assemble_regional_problem(fx.net, ix, fx.pd, fx.qd, tg, 7.5);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    VectorXd x(p.n);
    for (int j = 0; j < p.n; ++j) x[j] = uni(rng, 0.5, 1.5);
    VectorXd g = p.gradient(x);
    for (int j = 0; j < p.n; ++j) {
      VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      double fd = (p.objective(xp) - p.objective(xm)) / (2 * h);
      double scale = std::max({1.0, std::abs(fd), std::abs(g[j])});
      CHECK(std::abs(g[j] - fd) / scale < 1e-4);
    }
  }
}

TEST_CASE("nlp callbacks: constraint jacobians and hessian match finite differences") {
  FixtureSetup fx;
  RegionIndexing ix = build_indexing(fx.net, fx.views[1]);
  std::mt19937_64 rng(13);
  CouplingTargets tg = zero_targets(fx.views[1]);
  NlpProblem p = assemble_regional_problem(fx.net, ix, fx.pd, fx.qd, tg, 3.0);
  VectorXd x(p.n);
  for (int j = 0; j < p.n; ++j) x[j] = uni(rng, 0.8, 1.2);
  const double h = 1e-6;

  MatrixXd JE = p.eq_jac(x);
  for (int j = 0; j < p.n; ++j) {
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    VectorXd fd = (p.eq(xp) - p.eq(xm)) / (2 * h);
    CHECK((JE.col(j) - fd).lpNorm<Eigen::Infinity>() < 1e-5);
  }

  VectorXd y(p.num_eq), w(p.num_ineq);
  for (int i = 0; i < p.num_eq; ++i) y[i] = uni(rng, -2, 2);
  for (int i = 0; i < p.num_ineq; ++i) w[i] = uni(rng, 0, 2);
  MatrixXd H = p.lag_hessian(x, 1.0, y, w);
  auto grad_lag = [&](const VectorXd& xx) -> VectorXd {
    return p.gradient(xx) + p.eq_jac(xx).transpose() * y +
           p.ineq_jac(xx).transpose() * w;
  };
  for (int j = 0; j < p.n; ++j) {
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    VectorXd fd = (grad_lag(xp) - grad_lag(xm)) / (2 * h);
    CHECK((H.col(j) - fd).lpNorm<Eigen::Infinity>() < 1e-4);
  }
}

TEST_CASE("kcl residual cases") {
  SECTION("all zeros") {
    nlohmann::json doc = nlohmann::json::parse(R"({
      "base_mva": 100.0,
      "buses": [
        {"id": "a", "vmin": 0.9, "vmax": 1.1, "region": "R", "reference": true},
        {"id": "b", "vmin": 0.9, "vmax": 1.1, "region": "R"}
      ],
      "branches": [{"from": "a", "to": "b", "g": 2.0, "b": -8.0, "smax": 1.0}],
      "generators": [],
      "loads": []
    })");
    PowerNetwork net = parse_network(doc);
    auto views = partition(net);
    RegionIndexing ix = build_indexing(net, views[0]);
    RegionalPrimal primal;
    primal.v = VectorXd::Constant(ix.nb, 1.0);
    primal.theta = VectorXd::Zero(ix.nb);
    primal.pg = VectorXd(0);
    primal.qg = VectorXd(0);
    primal.pf = VectorXd::Zero(ix.ndir);
    primal.qf = VectorXd::Zero(ix.ndir);
    auto mm = evaluate_kcl_residual(primal, net, ix, VectorXd(0), VectorXd(0));
    for (auto& [mp, mq] : mm) {
      CHECK(mp == 0.0);
      CHECK(mq == 0.0);
    }
  }
  SECTION("single bus, generation balances load") {
    PowerNetwork net;
    Bus bus;
    bus.id = "only";
    bus.vmin = 0.9;
    bus.vmax = 1.1;
    bus.region = "R";
    bus.is_reference = true;
    net.buses.push_back(bus);
    net.region_ids = {"R"};
    net.bus_region = {0};
    net.reference_bus = 0;
    Generator gen;
    gen.bus = 0;
    gen.pmax = 2.0;
    gen.qmin = -1.0;
    gen.qmax = 1.0;
    net.generators.push_back(gen);
    Load load;
    load.bus = 0;
    load.pd = 1.0;
    net.loads.push_back(load);
    auto views = partition(net);
    RegionIndexing ix = build_indexing(net, views[0]);
    RegionalPrimal primal;
    primal.v = VectorXd::Constant(1, 1.0);
    primal.theta = VectorXd::Zero(1);
    primal.pg = VectorXd::Constant(1, 1.0);
    primal.qg = VectorXd::Zero(1);
    primal.pf = VectorXd(0);
    primal.qf = VectorXd(0);
    VectorXd pd = VectorXd::Constant(1, 1.0), qd = VectorXd::Zero(1);
    auto mm = evaluate_kcl_residual(primal, net, ix, pd, qd);
    CHECK(std::abs(mm[0].first) < 1e-15);
    CHECK(std::abs(mm[0].second) < 1e-15);
  }
  SECTION("feasible centralized point has tiny mismatch") {
    FixtureSetup fx;
    RegionIndexing ix = build_indexing(fx.net, whole_network_view(fx.net));
    NlpProblem p = assemble_centralized_problem(fx.net, ix, fx.pd, fx.qd);
    NlpSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::converged);
    RegionalPrimal primal = RegionalPrimal::from_x(ix, sol.x);
    auto mm = evaluate_kcl_residual(primal, fx.net, ix, fx.pd, fx.qd);
    for (auto& [mp, mq] : mm) {
      CHECK(std::abs(mp) < 1e-6);
      CHECK(std::abs(mq) < 1e-6);
    }
  }
}

TEST_CASE("regional solve pinned to centralized boundary recovers its restriction") {
  FixtureSetup fx;
  RegionIndexing cix = build_indexing(fx.net, whole_network_view(fx.net));
  NlpSolution central = solve(assemble_centralized_problem(fx.net, cix, fx.pd, fx.qd));
  REQUIRE(central.status == SolveStatus::converged);
  RegionalPrimal cp = RegionalPrimal::from_x(cix, central.x);

  const RegionView& view = fx.views[0];
  RegionIndexing rix = build_indexing(fx.net, view);
  // consensus targets taken from the centralized solution
  CouplingTargets tg = zero_targets(view);
  const int n_local_dir = 2 * static_cast<int>(view.local_branches.size());
  for (int c = 0; c < static_cast<int>(view.coupling_branches.size()); ++c) {
    for (int dir = 0; dir < 2; ++dir) {
      int rdi = n_local_dir + 2 * c + dir;
      const auto& d = rix.dbr[static_cast<std::size_t>(rdi)];
      // centralized directed-branch index
      int cdi = -1;
      for (int k = 0; k < cix.ndir; ++k)
        if (cix.dbr[static_cast<std::size_t>(k)].branch == d.branch &&
            cix.dbr[static_cast<std::size_t>(k)].from == d.from) {
          cdi = k;
          break;
        }
      REQUIRE(cdi >= 0);
      int base = 8 * c + 4 * dir;
      tg.cons[base + 0] = cp.pf[cdi];
      tg.cons[base + 1] = cp.qf[cdi];
      tg.cons[base + 2] = cp.v[cix.bus_pos.at(d.from)];
      tg.cons[base + 3] = cp.theta[cix.bus_pos.at(d.from)];
    }
  }

  // with a stiff penalty the subproblem pins the boundary to the
  // centralized values; agreement tightens as rho grows
  for (double rho : {1e4, 1e6}) {
    NlpProblem rp = assemble_regional_problem(fx.net, rix, fx.pd, fx.qd, tg, rho);
    SolverOptions opt;
    opt.max_iter = 400;
    NlpSolution rsol = solve(rp, opt);
    REQUIRE(rsol.status == SolveStatus::converged);
    RegionalPrimal reg = RegionalPrimal::from_x(rix, rsol.x);
    double dev = 0.0;
    for (int bpos = 0; bpos < rix.n_local_bus; ++bpos) {
      int bus = rix.bus_list[static_cast<std::size_t>(bpos)];
      dev = std::max(dev, std::abs(reg.v[bpos] - cp.v[cix.bus_pos.at(bus)]));
      dev = std::max(dev,
                     std::abs(reg.theta[bpos] - cp.theta[cix.bus_pos.at(bus)]));
    }
    for (int gi = 0; gi < rix.ng; ++gi) {
      int gen = view.local_generators[static_cast<std::size_t>(gi)];
      // centralized generator position
      int cgi = -1;
      for (int k = 0; k < cix.ng; ++k)
        if (cix.view.local_generators[static_cast<std::size_t>(k)] == gen) cgi = k;
      dev = std::max(dev, std::abs(reg.pg[gi] - cp.pg[cgi]));
    }
    if (rho >= 1e6)
      CHECK(dev < 2e-4);
    else
      CHECK(dev < 2e-2);
  }
}

TEST_CASE("regional objectives at a consensus-feasible point sum to the centralized cost") {
  FixtureSetup fx;
  RegionIndexing cix = build_indexing(fx.net, whole_network_view(fx.net));
  NlpSolution central = solve(assemble_centralized_problem(fx.net, cix, fx.pd, fx.qd));
  REQUIRE(central.status == SolveStatus::converged);
  RegionalPrimal cp = RegionalPrimal::from_x(cix, central.x);

  double total = 0.0;
  for (const auto& view : fx.views) {
    RegionIndexing rix = build_indexing(fx.net, view);
    // regional primal = centralized restriction
    RegionalPrimal reg;
    reg.v.resize(rix.nb);
    reg.theta.resize(rix.nb);
    for (int bp = 0; bp < rix.nb; ++bp) {
      int bus = rix.bus_list[static_cast<std::size_t>(bp)];
      reg.v[bp] = cp.v[cix.bus_pos.at(bus)];
      reg.theta[bp] = cp.theta[cix.bus_pos.at(bus)];
    }
    reg.pg.resize(rix.ng);
    reg.qg.resize(rix.ng);
    for (int gi = 0; gi < rix.ng; ++gi) {
      int gen = view.local_generators[static_cast<std::size_t>(gi)];
      for (int k = 0; k < cix.ng; ++k)
        if (cix.view.local_generators[static_cast<std::size_t>(k)] == gen) {
          reg.pg[gi] = cp.pg[k];
          reg.qg[gi] = cp.qg[k];
        }
    }
    reg.pf.resize(rix.ndir);
    reg.qf.resize(rix.ndir);
    for (int di = 0; di < rix.ndir; ++di) {
      const auto& d = rix.dbr[static_cast<std::size_t>(di)];
      for (int k = 0; k < cix.ndir; ++k)
        if (cix.dbr[static_cast<std::size_t>(k)].branch == d.branch &&
            cix.dbr[static_cast<std::size_t>(k)].from == d.from) {
          reg.pf[di] = cp.pf[k];
          reg.qf[di] = cp.qf[k];
        }
    }
    // consensus equals the regional values themselves
    CouplingTargets tg = zero_targets(view);
    std::vector<int> slots = coupling_slot_vars(rix);
    VectorXd x = reg.to_x(rix);
    for (std::size_t s = 0; s < slots.size(); ++s)
      tg.cons[static_cast<int>(s)] = x[slots[s]];
    std::mt19937_64 rng(14);
    for (int s = 0; s < tg.lam.size(); ++s) tg.lam[s] = uni(rng, -3.0, 3.0);
    NlpProblem rp = assemble_regional_problem(fx.net, rix, fx.pd, fx.qd, tg, 11.0);
    total += rp.objective(x);
  }
  CHECK(std::abs(total - central.objective) < 1e-9 * (1.0 + std::abs(central.objective)));
}

TEST_CASE("isolated zero-load bus drops its balance rows with a warning") {
  nlohmann::json doc = nlohmann::json::parse(R"({
    "base_mva": 100.0,
    "buses": [
      {"id": "a", "vmin": 0.9, "vmax": 1.1, "region": "R", "reference": true},
      {"id": "b", "vmin": 0.9, "vmax": 1.1, "region": "R"},
      {"id": "isolated", "vmin": 0.9, "vmax": 1.1, "region": "R"}
    ],
    "branches": [{"from": "a", "to": "b", "g": 2.0, "b": -8.0, "smax": 1.0}],
    "generators": [{"bus": "a", "pmin": 0, "pmax": 1, "qmin": -1, "qmax": 1, "cost": [0.2, 4.0, 1.0]}],
    "loads": [{"bus": "b", "pd": 0.2, "qd": 0.05}]
  })");
  PowerNetwork net = parse_network(doc);
  auto views = partition(net);
  RegionIndexing ix = build_indexing(net, views[0]);
  VectorXd pd, qd;
  nominal_loads(net, pd, qd);
  std::vector<std::string> warnings;
  NlpProblem p = assemble_regional_problem(net, ix, pd, qd, zero_targets(views[0]),
                                           1.0, EngineMode::one_level, 0.0, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("isolated") != std::string::npos);
  CHECK(p.num_eq == 2 * ix.ndir + 2 * 2 + 1);  // two balanced buses + reference row

  doc["loads"].push_back({{"bus", "isolated"}, {"pd", 0.1}, {"qd", 0.0}});
  PowerNetwork bad = parse_network(doc);
  auto bviews = partition(bad);
  RegionIndexing bix = build_indexing(bad, bviews[0]);
  VectorXd bpd, bqd;
  nominal_loads(bad, bpd, bqd);
  CHECK_THROWS_AS(assemble_regional_problem(bad, bix, bpd, bqd,
                                            zero_targets(bviews[0]), 1.0),
                  ValidationError);
}
