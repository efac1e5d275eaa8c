#include "visrooms/harness/metrics.hpp"

#include <fstream>
#include <numeric>

namespace visrooms {

using nlohmann::json;

namespace {

constexpr std::int64_t kMinuteMs = 60'000;

void bump(std::vector<std::uint64_t>& timeline, std::int64_t timestampMs) {
  const auto bucket = static_cast<std::size_t>(std::max<std::int64_t>(0, timestampMs) / kMinuteMs);
  if (timeline.size() <= bucket) timeline.resize(bucket + 1, 0);
  ++timeline[bucket];
}

}  // namespace

std::uint64_t UserMetrics::applied() const {
  return std::accumulate(opCounts.begin(), opCounts.end(), std::uint64_t{0});
}

UserMetrics MetricsReport::totals() const {
  UserMetrics t;
  for (const auto& [user, m] : perUser) {
    for (std::size_t k = 0; k < kOpKindCount; ++k) t.opCounts[k] += m.opCounts[k];
    t.rejected += m.rejected;
    t.documentRetrievals += m.documentRetrievals;
    t.nodesCreated += m.nodesCreated;
    t.linksCreated += m.linksCreated;
    if (t.timeline.size() < m.timeline.size()) t.timeline.resize(m.timeline.size(), 0);
    for (std::size_t i = 0; i < m.timeline.size(); ++i) t.timeline[i] += m.timeline[i];
  }
  return t;
}

void MetricsReport::record(const LoggedOp& entry) {
  UserMetrics& m = perUser[entry.op.actor.value];
  if (!entry.applied()) {
    ++m.rejected;
    return;
  }
  ++m.opCounts[static_cast<std::size_t>(entry.op.kind())];
  bump(m.timeline, entry.op.timestamp);
  if (const auto* add = std::get_if<ops::AddNode>(&entry.op.payload)) {
    ++m.nodesCreated;
    if (add->defaultLinkDoc) ++m.linksCreated;
  } else if (std::holds_alternative<ops::AddLink>(entry.op.payload)) {
    ++m.linksCreated;
  } else if (const auto* doc = std::get_if<ops::SetCurrentDocument>(&entry.op.payload)) {
    if (doc->document) ++m.documentRetrievals;
  }
}

json reportToJson(const MetricsReport& r) {
  json users = json::object();
  for (const auto& [user, m] : r.perUser) {
    json counts = json::object();
    for (OpKind k : kAllOpKinds) {
      counts[std::string(opKindName(k))] = m.opCounts[static_cast<std::size_t>(k)];
    }
    users[user] = {{"opCountsByKind", counts},
                   {"rejected", m.rejected},
                   {"documentRetrievals", m.documentRetrievals},
                   {"nodesCreated", m.nodesCreated},
                   {"linksCreated", m.linksCreated},
                   {"timelineBuckets", m.timeline}};
  }
  return {{"perUser", users},
          {"convergence",
           {{"converged", r.convergence.converged},
            {"timeToQuiescenceMs", r.convergence.timeToQuiescenceMs}}}};
}

MetricsReport reportFromJson(const json& j) {
  MetricsReport r;
  for (const auto& [user, u] : j.at("perUser").items()) {
    UserMetrics m;
    for (const auto& [kind, n] : u.at("opCountsByKind").items()) {
      const auto k = parseOpKind(kind);
      if (!k) throw std::invalid_argument("unknown op kind " + kind);
      m.opCounts[static_cast<std::size_t>(*k)] = n.get<std::uint64_t>();
    }
    m.rejected = u.at("rejected").get<std::uint64_t>();
    m.documentRetrievals = u.at("documentRetrievals").get<std::uint64_t>();
    m.nodesCreated = u.at("nodesCreated").get<std::uint64_t>();
    m.linksCreated = u.at("linksCreated").get<std::uint64_t>();
    m.timeline = u.at("timelineBuckets").get<std::vector<std::uint64_t>>();
    r.perUser[user] = std::move(m);
  }
  const json& c = j.at("convergence");
  r.convergence.converged = c.at("converged").get<bool>();
  r.convergence.timeToQuiescenceMs = c.at("timeToQuiescenceMs").get<std::int64_t>();
  return r;
}

MetricsReport analyzeLog(const std::filesystem::path& oplog) {
  std::ifstream in(oplog, std::ios::binary);
  if (!in) throw LogError(LogErrorCode::CorruptLog, 0, "cannot open " + oplog.string());
  MetricsReport r;
  std::string line;
  std::size_t lineNo = 0;
  auto corrupt = [&](const std::string& why) {
    return LogError(LogErrorCode::CorruptLog, lineNo,
                    oplog.string() + ":" + std::to_string(lineNo) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw corrupt(e.what());
    }
    if (lineNo == 1) {
      if (!j.contains("roomConfig")) throw corrupt("missing roomConfig header");
      continue;
    }
    try {
      UserMetrics& m = r.perUser[j.at("actor").get<std::string>()];
      if (!j.at("applied").get<bool>()) {
        ++m.rejected;
        continue;
      }
      const std::string kind = j.at("kind").get<std::string>();
      const auto k = parseOpKind(kind);
      if (!k) throw corrupt("unknown kind " + kind);
      ++m.opCounts[static_cast<std::size_t>(*k)];
      bump(m.timeline, j.at("timestamp").get<std::int64_t>());
      const json& payload = j.at("payload");
      if (kind == "AddNode") {
        ++m.nodesCreated;
        if (payload.contains("defaultLinkDoc") && !payload.at("defaultLinkDoc").is_null()) {
          ++m.linksCreated;
        }
      } else if (kind == "AddLink") {
        ++m.linksCreated;
      } else if (kind == "SetCurrentDocument" && !payload.at("document").is_null()) {
        ++m.documentRetrievals;
      }
    } catch (const json::exception& e) {
      throw corrupt(e.what());
    }
  }
  return r;
}

}  // namespace visrooms
