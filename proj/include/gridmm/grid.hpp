#pragma once

// Power-network data model: typed buses/branches/generators/loads, the
// bus->region assignment, regional views with coupling structure, and
// JSON file I/O. All electrical quantities are per-unit on base_mva.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gridmm {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bus {
  std::string id;
  double vmin = 0.0;
  double vmax = 0.0;
  std::string region;
  bool is_reference = false;

  friend bool operator==(const Bus&, const Bus&) = default;
};

// Series-admittance line y = g + jb between two buses; no shunt model.
struct Branch {
  int from = -1;  // bus index
  int to = -1;
  double g = 0.0;
  double b = 0.0;
  double smax = 0.0;  // apparent-power flow limit

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Generator {
  int bus = -1;
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // quadratic dispatch cost

  friend bool operator==(const Generator&, const Generator&) = default;
};

struct Load {
  int bus = -1;
  double pd = 0.0;
  double qd = 0.0;

  friend bool operator==(const Load&, const Load&) = default;
};

struct PowerNetwork {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;

  std::vector<std::string> region_ids;  // sorted, unique
  std::vector<int> bus_region;          // bus index -> region index
  int reference_bus = -1;

  int bus_index(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return static_cast<int>(i);
    return -1;
  }

  std::string branch_name(int e) const {
    const Branch& br = branches[static_cast<std::size_t>(e)];
    return "(" + buses[static_cast<std::size_t>(br.from)].id + "," +
           buses[static_cast<std::size_t>(br.to)].id + ")";
  }

  friend bool operator==(const PowerNetwork&, const PowerNetwork&) = default;
};

// One region's slice of the network. Branch/bus members are indices into
// the owning PowerNetwork. A coupling branch has exactly one endpoint in
// local_buses; it appears in the views of both endpoint regions.
struct RegionView {
  int region = -1;
  std::string region_id;
  std::vector<int> local_buses;        // N_k
  std::vector<int> local_branches;     // E_k
  std::vector<int> coupling_branches;  // R_k
  std::vector<int> border_buses;       // N^B_k, subset of N_k
  std::vector<int> neighbor_buses;     // N^N_k, disjoint from N_k
  std::vector<int> local_generators;   // G_k
  std::vector<int> local_loads;        // D_k

  bool is_local_bus(int bus) const {
    return std::binary_search(local_buses.begin(), local_buses.end(), bus);
  }
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

inline void validate(const PowerNetwork& net) {
  int refs = 0;
  for (const Bus& bus : net.buses) {
    if (!(bus.vmin > 0.0) || !(bus.vmin <= bus.vmax))
      throw ValidationError("bus " + bus.id + ": need 0 < vmin <= vmax");
    if (bus.region.empty())
      throw ValidationError("bus " + bus.id + ": empty region");
    if (bus.is_reference) ++refs;
  }
  if (refs != 1)
    throw ValidationError("network must have exactly one reference bus, got " +
                          std::to_string(refs));
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const Branch& br = net.branches[e];
    if (br.from < 0 || br.to < 0)
      throw ValidationError("branch #" + std::to_string(e) +
                            ": endpoint references a missing bus id");
    if (br.from == br.to)
      throw ValidationError("branch " + net.branch_name(static_cast<int>(e)) +
                            ": from == to");
    if (!(br.smax > 0.0))
      throw ValidationError("branch " + net.branch_name(static_cast<int>(e)) +
                            ": smax must be > 0");
    if (br.g == 0.0 && br.b == 0.0)
      throw ValidationError("branch " + net.branch_name(static_cast<int>(e)) +
                            ": admittance (g,b) must be nonzero");
  }
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    if (gen.bus < 0)
      throw ValidationError("generator #" + std::to_string(g) +
                            " references a missing bus id");
    if (gen.pmin > gen.pmax || gen.qmin > gen.qmax)
      throw ValidationError("generator #" + std::to_string(g) +
                            ": inverted dispatch bounds");
    if (gen.c2 < 0.0)
      throw ValidationError("generator #" + std::to_string(g) + ": c2 < 0");
  }
  for (std::size_t d = 0; d < net.loads.size(); ++d) {
    const Load& load = net.loads[d];
    if (load.bus < 0)
      throw ValidationError("load #" + std::to_string(d) +
                            " references a missing bus id");
    if (!std::isfinite(load.pd) || !std::isfinite(load.qd))
      throw ValidationError("load #" + std::to_string(d) +
                            ": non-finite demand");
  }
  if (net.region_ids.empty())
    throw ValidationError("network has no regions");
}

}  // namespace detail

inline PowerNetwork parse_network(const nlohmann::json& doc) {
  PowerNetwork net;
  net.base_mva = detail::require(doc, "base_mva", "document").get<double>();

  std::map<std::string, int> bus_of;
  for (const auto& jb : detail::require(doc, "buses", "document")) {
    Bus bus;
    bus.id = detail::require(jb, "id", "bus").get<std::string>();
    bus.vmin = detail::require(jb, "vmin", "bus " + bus.id).get<double>();
    bus.vmax = detail::require(jb, "vmax", "bus " + bus.id).get<double>();
    bus.region = detail::require(jb, "region", "bus " + bus.id).get<std::string>();
    bus.is_reference = jb.value("reference", false);
    if (bus_of.count(bus.id))
      throw ValidationError("duplicate bus id " + bus.id);
    bus_of[bus.id] = static_cast<int>(net.buses.size());
    net.buses.push_back(bus);
  }

  auto lookup = [&](const nlohmann::json& j, const char* key,
                    const std::string& where) -> int {
    std::string id = detail::require(j, key, where).get<std::string>();
    auto it = bus_of.find(id);
    return it == bus_of.end() ? -1 : it->second;
  };

  for (const auto& je : detail::require(doc, "branches", "document")) {
    Branch br;
    std::string from = detail::require(je, "from", "branch").get<std::string>();
    std::string to = detail::require(je, "to", "branch").get<std::string>();
    br.from = bus_of.count(from) ? bus_of[from] : -1;
    br.to = bus_of.count(to) ? bus_of[to] : -1;
    if (br.from < 0 || br.to < 0)
      throw ValidationError("branch (" + from + "," + to +
                            ") references a missing bus id");
    br.g = detail::require(je, "g", "branch (" + from + "," + to + ")").get<double>();
    br.b = detail::require(je, "b", "branch (" + from + "," + to + ")").get<double>();
    br.smax = detail::require(je, "smax", "branch (" + from + "," + to + ")").get<double>();
    net.branches.push_back(br);
  }

  for (const auto& jg : detail::require(doc, "generators", "document")) {
    Generator gen;
    gen.bus = lookup(jg, "bus", "generator");
    if (gen.bus < 0)
      throw ValidationError("generator references a missing bus id " +
                            detail::require(jg, "bus", "generator").get<std::string>());
    gen.pmin = detail::require(jg, "pmin", "generator").get<double>();
    gen.pmax = detail::require(jg, "pmax", "generator").get<double>();
    gen.qmin = detail::require(jg, "qmin", "generator").get<double>();
    gen.qmax = detail::require(jg, "qmax", "generator").get<double>();
    const auto& cost = detail::require(jg, "cost", "generator");
    if (!cost.is_array() || cost.size() != 3)
      throw ParseError("generator cost must be [c2,c1,c0]");
    gen.c2 = cost[0].get<double>();
    gen.c1 = cost[1].get<double>();
    gen.c0 = cost[2].get<double>();
    net.generators.push_back(gen);
  }

  for (const auto& jd : detail::require(doc, "loads", "document")) {
    Load load;
    load.bus = lookup(jd, "bus", "load");
    if (load.bus < 0)
      throw ValidationError("load references a missing bus id " +
                            detail::require(jd, "bus", "load").get<std::string>());
    load.pd = detail::require(jd, "pd", "load").get<double>();
    load.qd = detail::require(jd, "qd", "load").get<double>();
    net.loads.push_back(load);
  }

  std::set<std::string> regions;
  for (const Bus& bus : net.buses)
    if (!bus.region.empty()) regions.insert(bus.region);
  net.region_ids.assign(regions.begin(), regions.end());
  net.bus_region.resize(net.buses.size());
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    auto it = std::lower_bound(net.region_ids.begin(), net.region_ids.end(),
                               net.buses[i].region);
    net.bus_region[i] = static_cast<int>(it - net.region_ids.begin());
    if (net.buses[i].is_reference) net.reference_bus = static_cast<int>(i);
  }

  detail::validate(net);
  return net;
}

inline PowerNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError("malformed JSON in " + path + ": " + ex.what());
  }
  return parse_network(doc);
}

inline nlohmann::json network_to_json(const PowerNetwork& net) {
  nlohmann::json doc;
  doc["base_mva"] = net.base_mva;
  doc["buses"] = nlohmann::json::array();
  for (const Bus& bus : net.buses) {
    nlohmann::json jb{{"id", bus.id},
                      {"vmin", bus.vmin},
                      {"vmax", bus.vmax},
                      {"region", bus.region}};
    if (bus.is_reference) jb["reference"] = true;
    doc["buses"].push_back(jb);
  }
  doc["branches"] = nlohmann::json::array();
  for (const Branch& br : net.branches)
    doc["branches"].push_back({{"from", net.buses[static_cast<std::size_t>(br.from)].id},
                               {"to", net.buses[static_cast<std::size_t>(br.to)].id},
                               {"g", br.g},
                               {"b", br.b},
                               {"smax", br.smax}});
  doc["generators"] = nlohmann::json::array();
  for (const Generator& gen : net.generators)
    doc["generators"].push_back(
        {{"bus", net.buses[static_cast<std::size_t>(gen.bus)].id},
         {"pmin", gen.pmin},
         {"pmax", gen.pmax},
         {"qmin", gen.qmin},
         {"qmax", gen.qmax},
         {"cost", {gen.c2, gen.c1, gen.c0}}});
  doc["loads"] = nlohmann::json::array();
  for (const Load& load : net.loads)
    doc["loads"].push_back({{"bus", net.buses[static_cast<std::size_t>(load.bus)].id},
                            {"pd", load.pd},
                            {"qd", load.qd}});
  return doc;
}

inline void save_network(const PowerNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << network_to_json(net).dump(2) << "\n";
}

// Splits the network into per-region views. Every branch lands either in
// exactly one E_k or in the R_k of both endpoint regions.
inline std::vector<RegionView> partition(const PowerNetwork& net) {
  const int nregions = static_cast<int>(net.region_ids.size());
  std::vector<RegionView> views(static_cast<std::size_t>(nregions));
  for (int k = 0; k < nregions; ++k) {
    views[static_cast<std::size_t>(k)].region = k;
    views[static_cast<std::size_t>(k)].region_id = net.region_ids[static_cast<std::size_t>(k)];
  }

  for (std::size_t i = 0; i < net.buses.size(); ++i)
    views[static_cast<std::size_t>(net.bus_region[i])].local_buses.push_back(
        static_cast<int>(i));
  for (const RegionView& view : views)
    if (view.local_buses.empty())
      throw ValidationError("region " + view.region_id + " has no buses");

  std::vector<std::set<int>> border(static_cast<std::size_t>(nregions));
  std::vector<std::set<int>> neighbor(static_cast<std::size_t>(nregions));
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    const Branch& br = net.branches[e];
    int ra = net.bus_region[static_cast<std::size_t>(br.from)];
    int rb = net.bus_region[static_cast<std::size_t>(br.to)];
    if (ra == rb) {
      views[static_cast<std::size_t>(ra)].local_branches.push_back(
          static_cast<int>(e));
    } else {
      views[static_cast<std::size_t>(ra)].coupling_branches.push_back(
          static_cast<int>(e));
      views[static_cast<std::size_t>(rb)].coupling_branches.push_back(
          static_cast<int>(e));
      border[static_cast<std::size_t>(ra)].insert(br.from);
      border[static_cast<std::size_t>(rb)].insert(br.to);
      neighbor[static_cast<std::size_t>(ra)].insert(br.to);
      neighbor[static_cast<std::size_t>(rb)].insert(br.from);
    }
  }
  for (int k = 0; k < nregions; ++k) {
    RegionView& view = views[static_cast<std::size_t>(k)];
    view.border_buses.assign(border[static_cast<std::size_t>(k)].begin(),
                             border[static_cast<std::size_t>(k)].end());
    view.neighbor_buses.assign(neighbor[static_cast<std::size_t>(k)].begin(),
                               neighbor[static_cast<std::size_t>(k)].end());
  }

  for (std::size_t g = 0; g < net.generators.size(); ++g)
    views[static_cast<std::size_t>(
              net.bus_region[static_cast<std::size_t>(net.generators[g].bus)])]
        .local_generators.push_back(static_cast<int>(g));
  for (std::size_t d = 0; d < net.loads.size(); ++d)
    views[static_cast<std::size_t>(
              net.bus_region[static_cast<std::size_t>(net.loads[d].bus)])]
        .local_loads.push_back(static_cast<int>(d));

  return views;
}

}  // namespace gridmm
