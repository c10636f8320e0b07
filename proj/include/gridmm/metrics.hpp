#pragma once

// Evaluation metrics and the baseline protocol: mean prediction error per
// quantity type, objective gap against the long-run ground truth (P-DATA),
// optimality gap against the centralized solve, and the N-ADMM / P-ADMM /
// ML-ADMM comparison runs with per-instance rows for box-plot export.

#include "gridmm/dataset.hpp"

namespace gridmm {

inline double objective_gap(double run_objective, double reference_objective) {
  if (reference_objective == 0.0)
    throw std::invalid_argument("objective gap needs a nonzero reference");
  return 100.0 * (run_objective - reference_objective) / reference_objective;
}

struct PredictionError {
  std::map<std::string, double> pct;  // quantity name -> mean error %
  std::map<std::string, long> samples;
  long skipped = 0;  // zero-norm ground-truth vectors
};

// 100 * (1/|K|) sum_k (1/|T_k|) sum_t |yhat - y|_1 / |y|_1, per quantity.
inline PredictionError prediction_error(const PredictorBank& bank,
                                        const std::vector<RegionView>& views,
                                        const std::vector<const TrainingInstance*>& test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  PredictionError result;
  int nq = quantity_count(bank.two_level);
  // per quantity, per region: accumulated ratio and count
  std::vector<std::vector<double>> acc(static_cast<std::size_t>(nq),
                                       std::vector<double>(views.size(), 0.0));
  std::vector<std::vector<long>> cnt(static_cast<std::size_t>(nq),
                                     std::vector<long>(views.size(), 0));
  for (const TrainingInstance* inst : test) {
    RegionTargets pred = predict_warmstart(bank, views, inst->pd, inst->qd);
    for (std::size_t k = 0; k < views.size(); ++k) {
      if (coupling_dim(views[k]) == 0) continue;
      for (int q = 0; q < nq; ++q) {
        VectorXd truth = extract_quantity(inst->targets[k], static_cast<Quantity>(q));
        VectorXd hat = extract_quantity(pred[k], static_cast<Quantity>(q));
        double denom = truth.lpNorm<1>();
        if (denom == 0.0) {
          ++result.skipped;
          continue;
        }
        acc[static_cast<std::size_t>(q)][k] += (hat - truth).lpNorm<1>() / denom;
        ++cnt[static_cast<std::size_t>(q)][k];
      }
    }
  }
  for (int q = 0; q < nq; ++q) {
    double region_mean = 0.0;
    int regions_counted = 0;
    long total = 0;
    for (std::size_t k = 0; k < views.size(); ++k) {
      if (cnt[static_cast<std::size_t>(q)][k] == 0) continue;
      region_mean += acc[static_cast<std::size_t>(q)][k] /
                     static_cast<double>(cnt[static_cast<std::size_t>(q)][k]);
      total += cnt[static_cast<std::size_t>(q)][k];
      ++regions_counted;
    }
    const char* name = quantity_name(static_cast<Quantity>(q));
    result.pct[name] =
        regions_counted > 0 ? 100.0 * region_mean / regions_counted : 0.0;
    result.samples[name] = total;
  }
  return result;
}

struct EvalRow {
  int instance_id = 0;
  std::string method;
  int budget = 0;
  double objective = 0.0;
  double gap_vs_pdata = 0.0;
  double gap_vs_central = 0.0;
  double rp_inf = 0.0, rd_inf = 0.0;
  bool failed = false;
};

struct EvalSummary {
  std::string method;
  int budget = 0;
  double mean_gap_pdata = 0.0;
  double mean_abs_gap_pdata = 0.0;
  double mean_gap_central = 0.0;
  double mean_rp = 0.0, mean_rd = 0.0;
  long count = 0;
};

struct EvalReport {
  std::vector<int> budgets;
  std::vector<EvalRow> rows;
  std::vector<EvalSummary> summaries;
  PredictionError prediction;
  long failed_runs = 0;
};

struct EvalConfig {
  EngineMode engine = EngineMode::one_level;
  double rho0 = 10.0;
  std::vector<int> budgets = {5, 50, 100, 150, 200, 250, 300, 500};
  AdmmConfig cfg;
  TwoLevelParams two_level;
  int workers = 1;
};

namespace evaldetail {

struct MethodTrace {
  AdmmTrace trace;
  bool ok = false;
};

inline MethodTrace run_method(const PowerNetwork& net,
                              const std::vector<RegionView>& views,
                              const TrainingInstance& inst,
                              const std::optional<RegionTargets>& warm,
                              const EvalConfig& ec, int t_max) {
  MethodTrace result;
  TwoLevelState st;
  if (ec.engine == EngineMode::two_level) {
    st = warm ? two_level_warm_start(net, views, *warm, ec.rho0)
              : two_level_cold_start(net, views, ec.rho0);
    if (ec.two_level.beta > 0.0) st.tl = ec.two_level;
  } else {
    static_cast<ConsensusState&>(st) = warm ? warm_start(net, views, *warm, ec.rho0)
                                            : cold_start(net, views, ec.rho0);
  }
  result.trace = admmdetail::run_core(
      net, views, inst.pd, inst.qd, st,
      ec.engine == EngineMode::two_level ? &st.tl : nullptr, ec.cfg, t_max);
  result.ok = result.trace.status != SolveStatus::failure &&
              static_cast<int>(result.trace.iters.size()) == t_max;
  return result;
}

}  // namespace evaldetail

// The baseline protocol over every feasible test instance. P-DATA is the
// stored labeling run; N-ADMM runs cold, P-ADMM warm from the recorded
// ground truth, ML-ADMM warm from the predictor bank.
inline EvalReport run_baselines(const PowerNetwork& net,
                                const std::vector<RegionView>& views,
                                const std::vector<const TrainingInstance*>& test,
                                const PredictorBank& bank, const EvalConfig& ec) {
  EvalReport report;
  report.budgets = ec.budgets;
  int t_max = *std::max_element(ec.budgets.begin(), ec.budgets.end());

  std::vector<std::vector<EvalRow>> rows_per_instance(test.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < test.size(); ++i) {
    tasks.push_back([&, i]() {
      const TrainingInstance& inst = *test[i];
      std::vector<std::pair<std::string, std::optional<RegionTargets>>> methods;
      methods.push_back({"N-ADMM", std::nullopt});
      RegionTargets truth(views.size());
      for (std::size_t k = 0; k < views.size(); ++k) truth[k] = inst.targets[k];
      methods.push_back({"P-ADMM", truth});
      methods.push_back(
          {"ML-ADMM", predict_warmstart(bank, views, inst.pd, inst.qd)});
      for (auto& [name, warm] : methods) {
        auto mt = evaldetail::run_method(net, views, inst, warm, ec, t_max);
        for (int budget : ec.budgets) {
          EvalRow row;
          row.instance_id = inst.id;
          row.method = name;
          row.budget = budget;
          if (!mt.ok || budget > static_cast<int>(mt.trace.iters.size())) {
            row.failed = true;
          } else {
            const IterRecord& rec =
                mt.trace.iters[static_cast<std::size_t>(budget - 1)];
            row.objective = trace_total_objective(rec);
            row.gap_vs_pdata = objective_gap(row.objective, inst.objective);
            row.gap_vs_central = objective_gap(row.objective, inst.central_objective);
            row.rp_inf = rec.rp_inf;
            row.rd_inf = rec.rd_inf;
          }
          rows_per_instance[i].push_back(std::move(row));
        }
      }
    });
  }
  agentdetail::pool_executor(ec.workers, tasks);
  for (auto& rows : rows_per_instance)
    for (auto& row : rows) {
      if (row.failed) ++report.failed_runs;
      report.rows.push_back(std::move(row));
    }

  for (const char* method : {"N-ADMM", "P-ADMM", "ML-ADMM"}) {
    for (int budget : ec.budgets) {
      EvalSummary summary;
      summary.method = method;
      summary.budget = budget;
      for (const auto& row : report.rows) {
        if (row.method != method || row.budget != budget || row.failed) continue;
        summary.mean_gap_pdata += row.gap_vs_pdata;
        summary.mean_abs_gap_pdata += std::abs(row.gap_vs_pdata);
        summary.mean_gap_central += row.gap_vs_central;
        summary.mean_rp += row.rp_inf;
        summary.mean_rd += row.rd_inf;
        ++summary.count;
      }
      if (summary.count > 0) {
        summary.mean_gap_pdata /= static_cast<double>(summary.count);
        summary.mean_abs_gap_pdata /= static_cast<double>(summary.count);
        summary.mean_gap_central /= static_cast<double>(summary.count);
        summary.mean_rp /= static_cast<double>(summary.count);
        summary.mean_rd /= static_cast<double>(summary.count);
      }
      report.summaries.push_back(std::move(summary));
    }
  }
  return report;
}

// --- report emission ---

inline std::string report_rows_csv(const EvalReport& report) {
  std::string out = "instance,method,budget,objective,gap_pdata_pct,gap_central_pct,rp_inf,rd_inf,failed\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.instance_id) + "," + row.method + "," +
           std::to_string(row.budget) + ",";
    format_double(out, row.objective);
    out += ",";
    format_double(out, row.gap_vs_pdata);
    out += ",";
    format_double(out, row.gap_vs_central);
    out += ",";
    format_double(out, row.rp_inf);
    out += ",";
    format_double(out, row.rd_inf);
    out += ",";
    out += row.failed ? "1" : "0";
    out += "\n";
  }
  return out;
}

inline std::string report_summary_csv(const EvalReport& report) {
  std::string out =
      "method,budget,mean_gap_pdata_pct,mean_abs_gap_pdata_pct,mean_gap_central_pct,mean_rp_inf,mean_rd_inf,n\n";
  for (const auto& s : report.summaries) {
    out += s.method + "," + std::to_string(s.budget) + ",";
    format_double(out, s.mean_gap_pdata);
    out += ",";
    format_double(out, s.mean_abs_gap_pdata);
    out += ",";
    format_double(out, s.mean_gap_central);
    out += ",";
    format_double(out, s.mean_rp);
    out += ",";
    format_double(out, s.mean_rd);
    out += "," + std::to_string(s.count) + "\n";
  }
  return out;
}

inline std::string prediction_error_csv(const PredictionError& pe) {
  std::string out = "quantity,error_pct,n\n";
  for (const auto& [name, pct] : pe.pct) {
    out += name + ",";
    format_double(out, pct);
    out += "," + std::to_string(pe.samples.at(name)) + "\n";
  }
  return out;
}

inline std::string report_summary_markdown(const EvalReport& report) {
  std::string out =
      "| method | budget | gap vs P-DATA (%) | gap vs centralized (%) | rp_inf | rd_inf | n |\n"
      "|---|---|---|---|---|---|---|\n";
  char buf[64];
  for (const auto& s : report.summaries) {
    std::snprintf(buf, sizeof(buf), "| %s | %d | %.4f | %.4f | %.3e | %.3e | %ld |\n",
                  s.method.c_str(), s.budget, s.mean_gap_pdata, s.mean_gap_central,
                  s.mean_rp, s.mean_rd, s.count);
    out += buf;
  }
  return out;
}

enum class ReportFormat { csv, markdown };

// Writes rows + summary (+ prediction errors) under the given prefix.
inline std::vector<std::string> emit_report(const EvalReport& report,
                                            ReportFormat format,
                                            const std::string& prefix) {
  std::vector<std::string> written;
  auto write = [&](const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    written.push_back(path);
  };
  if (format == ReportFormat::csv) {
    write(prefix + "_rows.csv", report_rows_csv(report));
    write(prefix + "_summary.csv", report_summary_csv(report));
    if (!report.prediction.pct.empty())
      write(prefix + "_prediction_error.csv", prediction_error_csv(report.prediction));
  } else {
    write(prefix + "_summary.md", report_summary_markdown(report));
  }
  return written;
}

}  // namespace gridmm
