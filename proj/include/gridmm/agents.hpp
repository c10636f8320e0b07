#pragma once

// Decentralized execution harness: one logical agent per region and a
// coordinator mediating consensus exchange. Agents run in-process on a
// worker pool; every cross-boundary value travels in a recorded message,
// which makes runs replayable and auditable. Traces are bitwise identical
// to the sequential engine for any worker count.

#include <atomic>
#include <optional>
#include <thread>

#include <json.hpp>

#include "gridmm/admm.hpp"
#include "gridmm/two_level.hpp"

namespace gridmm {

enum class MessageKind { SolveRequest, SolveResult, ConsensusBroadcast, Terminate };

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::SolveRequest: return "SolveRequest";
    case MessageKind::SolveResult: return "SolveResult";
    case MessageKind::ConsensusBroadcast: return "ConsensusBroadcast";
    default: return "Terminate";
  }
}

struct AgentMessage {
  int id = 0;
  MessageKind kind = MessageKind::Terminate;
  int iteration = 0;
  std::string region;  // "*" for coordinator broadcasts
  nlohmann::json payload;
};

struct DecentralizedOptions {
  EngineMode engine = EngineMode::one_level;
  int workers = 1;
  double rho0 = 10.0;
  std::optional<RegionTargets> warm;  // cold start when absent
  AdmmConfig cfg;
  TwoLevelParams two_level;  // beta filled from rho0 when zero
  bool record_messages = true;
};

struct DecentralizedResult {
  AdmmTrace trace;
  std::vector<AgentMessage> log;
  ConsensusState final_state;  // two-level extras populated in that mode
  TwoLevelParams final_two_level;
};

namespace agentdetail {

// Branch-keyed JSON for a regional slot vector (8 slots per branch).
inline nlohmann::json coupling_json(const PowerNetwork& net, const RegionView& view,
                                    const VectorXd& local,
                                    const char* field = "vals") {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t c = 0; c < view.coupling_branches.size(); ++c) {
    const Branch& br =
        net.branches[static_cast<std::size_t>(view.coupling_branches[c])];
    nlohmann::json entry;
    entry["from"] = net.buses[static_cast<std::size_t>(br.from)].id;
    entry["to"] = net.buses[static_cast<std::size_t>(br.to)].id;
    std::vector<double> vals(8);
    for (int s = 0; s < 8; ++s) vals[static_cast<std::size_t>(s)] = local[8 * static_cast<int>(c) + s];
    entry[field] = vals;
    arr.push_back(entry);
  }
  return arr;
}

inline void pool_executor(int workers, std::vector<std::function<void()>>& tasks) {
  if (workers <= 1 || tasks.size() <= 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  std::vector<std::thread> threads;
  int n = std::min<int>(workers, static_cast<int>(tasks.size()));
  threads.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
}

}  // namespace agentdetail

inline DecentralizedResult run_decentralized(const PowerNetwork& net,
                                             const std::vector<RegionView>& views,
                                             const VectorXd& pd, const VectorXd& qd,
                                             DecentralizedOptions opts, int t_max) {
  if (opts.workers < 1)
    throw std::invalid_argument("run_decentralized needs at least one worker");
  DecentralizedResult result;

  TwoLevelState st;
  if (opts.engine == EngineMode::two_level) {
    st = opts.warm ? two_level_warm_start(net, views, *opts.warm, opts.rho0)
                   : two_level_cold_start(net, views, opts.rho0);
    if (opts.two_level.beta > 0.0) st.tl = opts.two_level;
  } else {
    static_cast<ConsensusState&>(st) =
        opts.warm ? warm_start(net, views, *opts.warm, opts.rho0)
                  : cold_start(net, views, opts.rho0);
  }

  int next_id = 0;
  EngineHooks hooks;
  if (opts.record_messages) {
    hooks.on_solve_request = [&](int iter, int region, const CouplingTargets& tg) {
      AgentMessage msg;
      msg.id = next_id++;
      msg.kind = MessageKind::SolveRequest;
      msg.iteration = iter;
      msg.region = views[static_cast<std::size_t>(region)].region_id;
      msg.payload["targets"] = agentdetail::coupling_json(
          net, views[static_cast<std::size_t>(region)], tg.cons, "cons");
      nlohmann::json lam = agentdetail::coupling_json(
          net, views[static_cast<std::size_t>(region)], tg.lam, "lam");
      for (std::size_t i = 0; i < lam.size(); ++i)
        msg.payload["targets"][i]["lam"] = lam[i]["lam"];
      if (opts.engine == EngineMode::two_level) {
        nlohmann::json z = agentdetail::coupling_json(
            net, views[static_cast<std::size_t>(region)], tg.z, "z");
        for (std::size_t i = 0; i < z.size(); ++i)
          msg.payload["targets"][i]["z"] = z[i]["z"];
      }
      result.log.push_back(std::move(msg));
    };
    hooks.on_solve_result = [&](int iter, int region, const RegionStep& step) {
      AgentMessage msg;
      msg.id = next_id++;
      msg.kind = MessageKind::SolveResult;
      msg.iteration = iter;
      msg.region = views[static_cast<std::size_t>(region)].region_id;
      msg.payload["values"] = agentdetail::coupling_json(
          net, views[static_cast<std::size_t>(region)], step.coupling_values);
      msg.payload["objective"] = step.objective;
      msg.payload["status"] = to_string(step.status);
      result.log.push_back(std::move(msg));
    };
    hooks.on_consensus_broadcast = [&](int iter, const VectorXd& consensus) {
      AgentMessage msg;
      msg.id = next_id++;
      msg.kind = MessageKind::ConsensusBroadcast;
      msg.iteration = iter;
      msg.region = "*";
      nlohmann::json arr = nlohmann::json::array();
      for (std::size_t c = 0; c < st.cidx.entries.size(); ++c) {
        const Branch& br = net.branches[static_cast<std::size_t>(
            st.cidx.entries[c].branch)];
        nlohmann::json entry;
        entry["from"] = net.buses[static_cast<std::size_t>(br.from)].id;
        entry["to"] = net.buses[static_cast<std::size_t>(br.to)].id;
        std::vector<double> vals(8);
        for (int s = 0; s < 8; ++s)
          vals[static_cast<std::size_t>(s)] = consensus[8 * static_cast<int>(c) + s];
        entry["vals"] = vals;
        arr.push_back(entry);
      }
      msg.payload["consensus"] = arr;
      result.log.push_back(std::move(msg));
    };
  }

  RegionExecutor executor = [&](std::vector<std::function<void()>>& tasks) {
    agentdetail::pool_executor(opts.workers, tasks);
  };

  bool stopped = false;
  AdmmConfig cfg = opts.cfg;
  auto user_stop = opts.cfg.stop_requested;
  cfg.stop_requested = [&](int iter) {
    if (user_stop && user_stop(iter)) {
      stopped = true;
      return true;
    }
    return false;
  };

  result.trace = admmdetail::run_core(
      net, views, pd, qd, st,
      opts.engine == EngineMode::two_level ? &st.tl : nullptr, cfg, t_max,
      executor, hooks);

  if (opts.record_messages && (stopped || result.trace.status == SolveStatus::failure)) {
    for (const auto& view : views) {
      AgentMessage msg;
      msg.id = next_id++;
      msg.kind = MessageKind::Terminate;
      msg.iteration = static_cast<int>(result.trace.iters.size()) + 1;
      msg.region = view.region_id;
      result.log.push_back(std::move(msg));
    }
  }
  result.final_state = st;
  result.final_two_level = st.tl;
  return result;
}

// --- message log export and privacy audit ---

inline nlohmann::json message_to_json(const AgentMessage& msg) {
  return {{"id", msg.id},
          {"kind", to_string(msg.kind)},
          {"iteration", msg.iteration},
          {"region", msg.region},
          {"payload", msg.payload}};
}

inline std::string log_to_jsonl(const std::vector<AgentMessage>& log) {
  std::string out;
  for (const auto& msg : log) {
    out += message_to_json(msg).dump();
    out += "\n";
  }
  return out;
}

inline void export_message_log(const std::vector<AgentMessage>& log,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << log_to_jsonl(log);
}

struct AuditReport {
  bool pass = true;
  std::vector<int> offending_messages;
  std::map<std::string, int> messages_per_kind;
  std::map<std::string, std::map<std::string, int>> results_per_region;  // kind -> region -> count
  std::map<std::string, int> fields_per_kind;
};

// Verifies that no message references interior network elements: only
// coupling branches and their border/neighbor buses may cross a region
// boundary. Bus references are checked per sending region.
inline AuditReport privacy_audit(const std::vector<AgentMessage>& log,
                                 const PowerNetwork& net,
                                 const std::vector<RegionView>& views) {
  AuditReport report;

  std::map<std::string, std::set<std::pair<std::string, std::string>>> region_branches;
  std::map<std::string, std::set<std::string>> region_buses;
  std::set<std::pair<std::string, std::string>> all_coupling;
  std::set<std::string> all_boundary;
  for (const auto& view : views) {
    for (int e : view.coupling_branches) {
      const Branch& br = net.branches[static_cast<std::size_t>(e)];
      auto key = std::make_pair(net.buses[static_cast<std::size_t>(br.from)].id,
                                net.buses[static_cast<std::size_t>(br.to)].id);
      region_branches[view.region_id].insert(key);
      all_coupling.insert(key);
    }
    for (int b : view.border_buses) {
      region_buses[view.region_id].insert(net.buses[static_cast<std::size_t>(b)].id);
      all_boundary.insert(net.buses[static_cast<std::size_t>(b)].id);
    }
    for (int b : view.neighbor_buses) {
      region_buses[view.region_id].insert(net.buses[static_cast<std::size_t>(b)].id);
      all_boundary.insert(net.buses[static_cast<std::size_t>(b)].id);
    }
  }

  std::function<bool(const nlohmann::json&, const std::string&, int&)> scan =
      [&](const nlohmann::json& node, const std::string& region, int& fields) -> bool {
    bool ok = true;
    if (node.is_object()) {
      if (node.contains("from") && node.contains("to") && node["from"].is_string()) {
        ++fields;
        auto key = std::make_pair(node["from"].get<std::string>(),
                                  node["to"].get<std::string>());
        const auto& allowed = region == "*" ? all_coupling : region_branches[region];
        if (!allowed.count(key)) ok = false;
      }
      if (node.contains("bus") && node["bus"].is_string()) {
        ++fields;
        const auto& allowed = region == "*" ? all_boundary : region_buses[region];
        if (!allowed.count(node["bus"].get<std::string>())) ok = false;
      }
      for (const auto& [key, child] : node.items())
        if (!scan(child, region, fields)) ok = false;
    } else if (node.is_array()) {
      for (const auto& child : node)
        if (!scan(child, region, fields)) ok = false;
    }
    return ok;
  };

  for (const auto& msg : log) {
    ++report.messages_per_kind[to_string(msg.kind)];
    ++report.results_per_region[to_string(msg.kind)][msg.region];
    int fields = 0;
    bool ok = scan(msg.payload, msg.region, fields);
    report.fields_per_kind[to_string(msg.kind)] += fields;
    if (!ok) {
      report.pass = false;
      report.offending_messages.push_back(msg.id);
    }
  }
  return report;
}

}  // namespace gridmm
