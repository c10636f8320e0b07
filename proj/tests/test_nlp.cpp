#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridmm/grid.hpp"
#include "gridmm/nlp.hpp"
#include "gridmm/opf.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gridmm;

namespace {

NlpProblem simple_quadratic() {
  NlpProblem p;
  p.n = 1;
  p.lo = VectorXd::Constant(1, 0.0);
  p.hi = VectorXd::Constant(1, 10.0);
  p.objective = [](const VectorXd& x) { return (x[0] - 3.0) * (x[0] - 3.0); };
  p.gradient = [](const VectorXd& x) {
    return VectorXd::Constant(1, 2.0 * (x[0] - 3.0));
  };
  p.lag_hessian = [](const VectorXd&, double sigma, const VectorXd&,
                     const VectorXd&) {
    return MatrixXd::Constant(1, 1, 2.0 * sigma);
  };
  p.x0 = VectorXd::Constant(1, 9.0);
  return p;
}

// min 1/2 x'Hx + c'x s.t. Ain x <= bin on a wide box, as an NlpProblem
NlpProblem qp_problem(const MatrixXd& H, const VectorXd& c, const MatrixXd& Ain,
                      const VectorXd& bin, const VectorXd& x0) {
  NlpProblem p;
  p.n = static_cast<int>(H.rows());
  p.lo = VectorXd::Constant(p.n, -50.0);
  p.hi = VectorXd::Constant(p.n, 50.0);
  p.objective = [H, c](const VectorXd& x) { return 0.5 * x.dot(H * x) + c.dot(x); };
  p.gradient = [H, c](const VectorXd& x) -> VectorXd { return H * x + c; };
  p.num_ineq = static_cast<int>(Ain.rows());
  p.ineq = [Ain, bin](const VectorXd& x) -> VectorXd { return Ain * x - bin; };
  p.ineq_jac = [Ain](const VectorXd&) { return Ain; };
  p.lag_hessian = [H](const VectorXd&, double sigma, const VectorXd&,
                      const VectorXd&) -> MatrixXd { return sigma * H; };
  p.x0 = x0;
  return p;
}

}  // namespace

TEST_CASE("bounded scalar quadratic") {
  NlpSolution sol = solve(simple_quadratic());
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(std::abs(sol.x[0] - 3.0) < 1e-6);
  CHECK(std::abs(sol.objective) < 1e-9);

  SECTION("finite-difference Hessian path") {
    NlpProblem p = simple_quadratic();
    p.lag_hessian = nullptr;
    NlpSolution fd = solve(p);
    REQUIRE(fd.status == SolveStatus::converged);
    CHECK(std::abs(fd.x[0] - 3.0) < 1e-6);
  }
}

TEST_CASE("linear objective on a circle") {
  // min x1 + x2 s.t. x1^2 + x2^2 = 2 on [-2,2]^2; minimizer (-1,-1)
  NlpProblem p;
  p.n = 2;
  p.lo = VectorXd::Constant(2, -2.0);
  p.hi = VectorXd::Constant(2, 2.0);
  p.objective = [](const VectorXd& x) { return x[0] + x[1]; };
  p.gradient = [](const VectorXd&) { return VectorXd::Constant(2, 1.0); };
  p.num_eq = 1;
  p.eq = [](const VectorXd& x) {
    return VectorXd::Constant(1, x[0] * x[0] + x[1] * x[1] - 2.0);
  };
  p.eq_jac = [](const VectorXd& x) {
    MatrixXd J(1, 2);
    J << 2.0 * x[0], 2.0 * x[1];
    return J;
  };
  p.lag_hessian = [](const VectorXd&, double, const VectorXd& y,
                     const VectorXd&) -> MatrixXd {
    return 2.0 * y[0] * MatrixXd::Identity(2, 2);
  };
  p.x0 = (VectorXd(2) << -0.5, -1.2).finished();
  NlpSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(std::abs(sol.x[0] + 1.0) < 1e-5);
  CHECK(std::abs(sol.x[1] + 1.0) < 1e-5);
  CHECK(std::abs(sol.objective + 2.0) < 1e-5);
}

TEST_CASE("centralized six-bus case matches the penalty oracle") {
  PowerNetwork net = load_network(testutil::data_path("case6_2region.json"));
  RegionIndexing ix = build_indexing(net, whole_network_view(net));
  VectorXd pd, qd;
  nominal_loads(net, pd, qd);
  NlpProblem p = assemble_centralized_problem(net, ix, pd, qd);

  SolverOptions opt;
  NlpSolution sol = solve(p, opt);
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(sol.max_violation < 1e-6);

  auto oracle = oracles::penalty_oracle(p, 1e-7);
  REQUIRE(oracle.converged);
  CHECK(std::abs(sol.objective - oracle.objective) <
        1e-4 * std::abs(oracle.objective));
}

TEST_CASE("kkt report") {
  SECTION("quadratic at its minimizer") {
    NlpProblem p = simple_quadratic();
    KktReport rep = check_kkt(p, VectorXd::Constant(1, 3.0), 1e-8);
    CHECK(rep.stationarity < 1e-8);
    CHECK(rep.max_violation < 1e-8);
    CHECK(rep.complementarity < 1e-8);
  }
  SECTION("feasible non-stationary point") {
    NlpProblem p = simple_quadratic();
    KktReport rep = check_kkt(p, VectorXd::Constant(1, 5.0), 1e-8);
    CHECK(rep.max_violation < 1e-12);
    CHECK(rep.stationarity > 1e-2);
  }
  SECTION("solver output on a fixture subproblem") {
    PowerNetwork net = load_network(testutil::data_path("case6_2region.json"));
    auto views = partition(net);
    RegionIndexing ix = build_indexing(net, views[0]);
    VectorXd pd, qd;
    nominal_loads(net, pd, qd);
    CouplingTargets tg;
    tg.cons = VectorXd::Zero(coupling_dim(views[0]));
    for (int c = 0; c < static_cast<int>(views[0].coupling_branches.size()); ++c) {
      tg.cons[8 * c + 2] = 1.0;  // v consensus at nominal magnitude
      tg.cons[8 * c + 6] = 1.0;
    }
    tg.lam = VectorXd::Zero(coupling_dim(views[0]));
    NlpProblem p = assemble_regional_problem(net, ix, pd, qd, tg, 10.0);
    NlpSolution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::converged);
    KktReport rep = check_kkt(p, sol.x, 1e-6);
    CHECK(rep.max_violation < 1e-6);
    CHECK(rep.stationarity < 1e-3);
  }
}

TEST_CASE("deterministic iterate sequence") {
  PowerNetwork net = load_network(testutil::data_path("case6_2region.json"));
  RegionIndexing ix = build_indexing(net, whole_network_view(net));
  VectorXd pd, qd;
  nominal_loads(net, pd, qd);
  NlpProblem p = assemble_centralized_problem(net, ix, pd, qd);
  SolverOptions opt;
  opt.record_iterates = true;
  NlpSolution a = solve(p, opt);
  NlpSolution b = solve(p, opt);
  REQUIRE(a.iterates.size() == b.iterates.size());
  for (std::size_t i = 0; i < a.iterates.size(); ++i)
    CHECK(a.iterates[i] == b.iterates[i]);
}

TEST_CASE("merit function is non-increasing across accepted steps") {
  std::mt19937_64 rng(2024);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    int mi = 1 + static_cast<int>(rng() % 3);
    MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = uni(-1, 1);
    MatrixXd H = M.transpose() * M + 0.2 * MatrixXd::Identity(n, n);
    VectorXd c(n), x0(n);
    for (int i = 0; i < n; ++i) {
      c[i] = uni(-2, 2);
      x0[i] = uni(-1, 1);
    }
    MatrixXd Ain(mi, n);
    VectorXd bin(mi);
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < n; ++j) Ain(i, j) = uni(-1, 1);
      bin[i] = uni(0.2, 2.0);  // keeps the origin strictly feasible
    }
    NlpProblem p = qp_problem(H, c, Ain, bin, x0);
    SolverOptions opt;
    opt.record_iterates = true;
    NlpSolution sol = solve(p, opt);
    REQUIRE(sol.status == SolveStatus::converged);
    for (const auto& [before, after] : sol.merit_steps)
      CHECK(after <= before + 1e-10 * (1.0 + std::abs(before)));
  }
}

TEST_CASE("convex QPs match the active-set enumeration oracle") {
  std::mt19937_64 rng(99);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    int mi = 1 + static_cast<int>(rng() % 4);
    MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = uni(-1, 1);
    MatrixXd H = M.transpose() * M + 0.3 * MatrixXd::Identity(n, n);
    VectorXd c(n), x0 = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c[i] = uni(-3, 3);
    MatrixXd Ain(mi, n);
    VectorXd bin(mi);
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < n; ++j) Ain(i, j) = uni(-1, 1);
      bin[i] = uni(0.1, 1.5);
    }
    auto oracle = oracles::qp_active_set_oracle(H, c, MatrixXd(0, n), VectorXd(0),
                                                Ain, bin);
    if (!oracle.found) continue;
    SolverOptions tight;
    tight.feas_tol = 1e-9;
    tight.opt_tol = 1e-9;
    NlpSolution sol = solve(qp_problem(H, c, Ain, bin, x0), tight);
    REQUIRE(sol.status == SolveStatus::converged);
    CHECK(std::abs(sol.objective - oracle.objective) < 1e-6 * (1.0 + std::abs(oracle.objective)));
    CHECK((sol.x - oracle.x).lpNorm<Eigen::Infinity>() < 1e-5);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("nan callbacks produce a failure status, not a crash") {
  NlpProblem p = simple_quadratic();
  p.objective = [](const VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
  SolverOptions opt;
  opt.allow_penalty_fallback = false;
  NlpSolution sol = solve(p, opt);
  CHECK(sol.status == SolveStatus::failure);
}

TEST_CASE("penalty fallback solves the quadratic") {
  SolverOptions opt;
  opt.force_penalty_fallback = true;
  NlpSolution sol = solve(simple_quadratic(), opt);
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(std::abs(sol.x[0] - 3.0) < 1e-4);
}

TEST_CASE("rank-deficient constraint jacobian is handled") {
  // the same equality twice: x1 + x2 = 1
  NlpProblem p;
  p.n = 2;
  p.lo = VectorXd::Constant(2, -5.0);
  p.hi = VectorXd::Constant(2, 5.0);
  p.objective = [](const VectorXd& x) { return x.squaredNorm(); };
  p.gradient = [](const VectorXd& x) -> VectorXd { return 2.0 * x; };
  p.num_eq = 2;
  p.eq = [](const VectorXd& x) {
    return VectorXd::Constant(2, x[0] + x[1] - 1.0);
  };
  p.eq_jac = [](const VectorXd&) {
    MatrixXd J(2, 2);
    J << 1, 1, 1, 1;
    return J;
  };
  p.lag_hessian = [](const VectorXd&, double sigma, const VectorXd&,
                     const VectorXd&) -> MatrixXd {
    return 2.0 * sigma * MatrixXd::Identity(2, 2);
  };
  p.x0 = VectorXd::Zero(2);
  NlpSolution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(std::abs(sol.x[0] - 0.5) < 1e-5);
  CHECK(std::abs(sol.x[1] - 0.5) < 1e-5);
}
