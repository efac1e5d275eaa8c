#include "visrooms/harness/scenario.hpp"

#include <fstream>

namespace visrooms {

using nlohmann::json;

OpMix defaultOpMix() {
  OpMix m{};
  auto set = [&](OpKind k, double w) { m[static_cast<std::size_t>(k)] = w; };
  set(OpKind::AddNode, 20);
  set(OpKind::MoveNode, 14);
  set(OpKind::RenameNode, 6);
  set(OpKind::DeleteNode, 4);
  set(OpKind::AddLink, 12);
  set(OpKind::RelabelLink, 4);
  set(OpKind::DeleteLink, 3);
  set(OpKind::MergeNodes, 2);
  set(OpKind::SelectNode, 8);
  set(OpKind::DeselectNode, 3);
  set(OpKind::SetCurrentDocument, 10);
  return m;
}

namespace {

std::string where(const std::string& client) { return "client '" + client + "': "; }

OpMix mixFromJson(const json& j, const std::string& client) {
  if (!j.is_object()) throw ScriptError(where(client) + "mix must be an object");
  OpMix m{};
  double sum = 0.0;
  for (const auto& [name, w] : j.items()) {
    const auto kind = parseOpKind(name);
    if (!kind) throw ScriptError(where(client) + "unknown op kind '" + name + "' in mix");
    if (!w.is_number() || w.get<double>() < 0.0) {
      throw ScriptError(where(client) + "mix weights must be nonnegative numbers");
    }
    m[static_cast<std::size_t>(*kind)] = w.get<double>();
    sum += w.get<double>();
  }
  if (!(sum > 0.0)) throw ScriptError(where(client) + "mix weights must sum to more than 0");
  return m;
}

ClientScript clientFromJson(const json& j) {
  ClientScript c;
  c.name = j.at("name").get<std::string>();
  if (c.name.empty()) throw ScriptError("client name must be non-empty");
  try {
    c.platform = parsePlatform(j.value("platform", std::string("flat2d")));
  } catch (const std::invalid_argument& e) {
    throw ScriptError(where(c.name) + e.what());
  }
  c.joinAtMs = j.value("joinAtMs", std::int64_t{0});
  c.awarenessIntervalMs = j.value("awarenessIntervalMs", std::int64_t{100});
  if (c.joinAtMs < 0 || c.awarenessIntervalMs < 0) {
    throw ScriptError(where(c.name) + "times must be nonnegative");
  }

  const bool scripted = j.contains("script");
  const bool random = j.contains("random");
  if (scripted == random) {
    throw ScriptError(where(c.name) + "needs exactly one of 'script' or 'random'");
  }
  if (scripted) {
    std::vector<ScriptedOp> ops;
    for (const json& s : j.at("script")) {
      const auto kind = parseOpKind(s.at("kind").get<std::string>());
      if (!kind) throw ScriptError(where(c.name) + "unknown op kind " + s.at("kind").dump());
      ScriptedOp op;
      op.atMs = s.value("at", std::int64_t{0});
      try {
        op.payload = payloadFromJson(*kind, s.value("payload", json::object()));
      } catch (const OperationFormatError& e) {
        throw ScriptError(where(c.name) + e.what());
      }
      ops.push_back(std::move(op));
    }
    c.behavior = std::move(ops);
  } else {
    const json& r = j.at("random");
    RandomBehavior b;
    b.seed = r.value("seed", std::uint64_t{0});
    b.count = r.at("count").get<int>();
    b.meanIntervalMs = r.value("meanIntervalMs", std::int64_t{200});
    if (r.contains("mix")) b.mix = mixFromJson(r.at("mix"), c.name);
    if (b.count < 0 || b.meanIntervalMs <= 0) {
      throw ScriptError(where(c.name) + "count must be >= 0 and meanIntervalMs > 0");
    }
    c.behavior = b;
  }
  return c;
}

}  // namespace

ScenarioScript scenarioFromJson(const json& j, const std::filesystem::path& baseDir) {
  try {
    ScenarioScript s;
    s.seed = j.value("seed", std::uint64_t{0});
    const json& corpus = j.at("corpus");
    if (corpus.is_string()) {
      std::filesystem::path p = corpus.get<std::string>();
      if (p.is_relative()) p = baseDir / p;
      try {
        s.room = loadRoomConfig(p);
      } catch (const std::exception& e) {
        throw ScriptError(std::string("corpus: ") + e.what());
      }
    } else {
      s.room = roomConfigFromJson(corpus);
    }

    const json net = j.value("network", json::object());
    s.network.latencyMinMs = net.value("latencyMinMs", std::int64_t{0});
    s.network.latencyMaxMs = net.value("latencyMaxMs", s.network.latencyMinMs);
    s.network.jitterMs = net.value("jitterMs", std::int64_t{0});
    s.network.dropAwarenessProb = net.value("dropAwarenessProb", 0.0);
    if (s.network.latencyMinMs < 0 || s.network.latencyMaxMs < s.network.latencyMinMs ||
        s.network.jitterMs < 0) {
      throw ScriptError("network: need 0 <= latencyMinMs <= latencyMaxMs and jitterMs >= 0");
    }
    if (!(s.network.dropAwarenessProb >= 0.0 && s.network.dropAwarenessProb <= 1.0)) {
      throw ScriptError("network: dropAwarenessProb must be in [0, 1]");
    }

    for (const json& c : j.at("clients")) s.clients.push_back(clientFromJson(c));
    if (s.clients.empty()) throw ScriptError("at least one client is required");
    return s;
  } catch (const ScriptError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScriptError(std::string("bad scenario: ") + e.what());
  }
}

json scenarioToJson(const ScenarioScript& s) {
  json clients = json::array();
  for (const ClientScript& c : s.clients) {
    json cj = {{"name", c.name},
               {"platform", platformName(c.platform)},
               {"joinAtMs", c.joinAtMs},
               {"awarenessIntervalMs", c.awarenessIntervalMs}};
    if (const auto* ops = std::get_if<std::vector<ScriptedOp>>(&c.behavior)) {
      json list = json::array();
      for (const ScriptedOp& op : *ops) {
        list.push_back({{"at", op.atMs},
                        {"kind", opKindName(payloadKind(op.payload))},
                        {"payload", payloadToJson(op.payload)}});
      }
      cj["script"] = list;
    } else {
      const auto& r = std::get<RandomBehavior>(c.behavior);
      json mix = json::object();
      for (OpKind k : kAllOpKinds) {
        const double w = r.mix[static_cast<std::size_t>(k)];
        if (w != 0.0) mix[std::string(opKindName(k))] = w;
      }
      cj["random"] = {{"seed", r.seed},
                      {"count", r.count},
                      {"meanIntervalMs", r.meanIntervalMs},
                      {"mix", mix}};
    }
    clients.push_back(cj);
  }
  return {{"seed", s.seed},
          {"corpus", roomConfigToJson(s.room)},
          {"network",
           {{"latencyMinMs", s.network.latencyMinMs},
            {"latencyMaxMs", s.network.latencyMaxMs},
            {"jitterMs", s.network.jitterMs},
            {"dropAwarenessProb", s.network.dropAwarenessProb}}},
          {"clients", clients}};
}

ScenarioScript loadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScriptError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScriptError(path.string() + ": " + e.what());
  }
  return scenarioFromJson(j, path.parent_path());
}

}  // namespace visrooms
