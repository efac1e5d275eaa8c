#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "support/sync_fixtures.hpp"
#include "visrooms/harness/simulator.hpp"

using namespace visrooms;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("visrooms-harness-" + tag + "-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path scenarioPath(const std::string& name) {
  return fs::path(VISROOMS_SOURCE_DIR) / "scenarios" / (name + ".json");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioScript randomScenario(int clients, int opsEach, std::int64_t latencyMax) {
  ScenarioScript s;
  s.seed = 5;
  s.room = loadRoomConfig(testing::corpusPath("prelim-a"));
  s.network.latencyMaxMs = latencyMax;
  for (int i = 0; i < clients; ++i) {
    ClientScript c;
    c.name = "c" + std::to_string(i);
    c.platform = i % 2 ? Platform::Spatial3d : Platform::Flat2d;
    RandomBehavior b;
    b.seed = static_cast<std::uint64_t>(i);
    b.count = opsEach;
    c.behavior = b;
    s.clients.push_back(c);
  }
  return s;
}

// Per-user applied counts only; the log carries no convergence info.
void checkSameCounts(const MetricsReport& a, const MetricsReport& b) {
  REQUIRE(a.perUser.size() == b.perUser.size());
  for (const auto& [user, m] : a.perUser) {
    REQUIRE(b.perUser.count(user) == 1);
    CHECK(m == b.perUser.at(user));
  }
}

}  // namespace

TEST_CASE("two scripted clients at zero latency converge") {
  const ScenarioScript s = loadScenario(scenarioPath("two-scripted"));
  REQUIRE(s.clients.size() == 2);
  const SimulationResult r = runScenario(s);
  CHECK(r.report.convergence.converged);
  CHECK(r.opsSequenced == 20);
  const UserMetrics t = r.report.totals();
  CHECK(t.applied() + t.rejected == 20);
  CHECK(r.serverVersion == t.applied());
  for (const auto& [name, c] : r.clients) {
    CHECK(c.stateHash == r.serverStateHash);
    CHECK(c.version == r.serverVersion);
  }
  // Both clients add the same link; the second one is a duplicate.
  CHECK(t.rejected >= 1);
  CHECK(r.clients.at("ana").rejectedSeen + r.clients.at("ben").rejectedSeen == t.rejected);
}

TEST_CASE("same seed gives the same report and log") {
  const ScenarioScript s = randomScenario(4, 40, 120);
  TempDir a("det-a");
  TempDir b("det-b");
  const SimulationResult r1 = runScenario(s, {std::nullopt, a.path, false});
  const SimulationResult r2 = runScenario(s, {std::nullopt, b.path, false});
  CHECK(r1.report == r2.report);
  CHECK(r1.serverStateHash == r2.serverStateHash);
  CHECK(slurp(*r1.logPath) == slurp(*r2.logPath));

  const SimulationResult r3 = runScenario(s, {std::uint64_t{99}, std::nullopt, false});
  CHECK(r3.serverStateHash != r1.serverStateHash);
}

TEST_CASE("dropping awareness does not change the converged state") {
  ScenarioScript s = randomScenario(4, 30, 80);
  const SimulationResult clean = runScenario(s);
  s.network.dropAwarenessProb = 0.9;
  const SimulationResult lossy = runScenario(s);
  CHECK(lossy.serverStateHash == clean.serverStateHash);
  CHECK(lossy.report.perUser == clean.report.perUser);
  std::size_t cleanSeen = 0;
  std::size_t lossySeen = 0;
  for (const auto& [n, c] : clean.clients) cleanSeen += c.awarenessReceived;
  for (const auto& [n, c] : lossy.clients) lossySeen += c.awarenessReceived;
  CHECK(cleanSeen > 0);
  CHECK(lossySeen < cleanSeen);
}

TEST_CASE("late joiner and jitter still converge") {
  ScenarioScript s = randomScenario(3, 30, 200);
  s.network.jitterMs = 60;
  s.clients[2].joinAtMs = 3000;
  const SimulationResult r = runScenario(s);
  CHECK(r.report.convergence.converged);
  CHECK(r.clients.at("c2").stateHash == r.serverStateHash);
}

TEST_CASE("analyzeLog counts match live counts and the replay matches the server") {
  const ScenarioScript s = randomScenario(5, 60, 250);
  TempDir dir("analyze");
  const SimulationResult r = runScenario(s, {std::nullopt, dir.path, false});
  REQUIRE(r.logPath);
  checkSameCounts(analyzeLog(*r.logPath), r.report);

  const ReplayedLog replay = loadLog(*r.logPath);
  CHECK(replay.entries.size() == r.opsSequenced);
  CHECK(stateHash(replay.state) == r.serverStateHash);
}

TEST_CASE("analyzeLog on empty and header-only logs") {
  TempDir dir("empty");
  const fs::path empty = dir.path / "empty.oplog.ndjson";
  std::ofstream(empty).close();
  CHECK(analyzeLog(empty).perUser.empty());

  const fs::path header = dir.path / "header.oplog.ndjson";
  std::ofstream(header) << json{{"roomConfig", roomConfigToJson(testing::smallConfig())}}.dump()
                        << "\n";
  const MetricsReport r = analyzeLog(header);
  CHECK(r.perUser.empty());
  CHECK(r.totals().applied() == 0);
}

TEST_CASE("document retrievals are counted from opens, not closes") {
  TempDir dir("retrievals");
  const fs::path log = dir.path / "r.oplog.ndjson";
  {
    const RoomConfig cfg = testing::smallConfig();
    OpLogWriter w = OpLogWriter::create(log, cfg);
    std::uint64_t seq = 1;
    for (int i = 0; i < 44; ++i) {
      LoggedOp open;
      open.op = {seq++, UserId(i % 2 ? "p17" : "p18"),
                 ops::SetCurrentDocument{cfg.documents[i % 3].id}, i * 1000};
      w.append(open);
      if (i % 4 == 0) {
        LoggedOp close;
        close.op = {seq++, UserId("p18"), ops::SetCurrentDocument{std::nullopt}, i * 1000 + 1};
        w.append(close);
      }
    }
  }
  const MetricsReport r = analyzeLog(log);
  CHECK(r.totals().documentRetrievals == 44);
  CHECK(r.perUser.at("p17").documentRetrievals == 22);
  CHECK(r.totals().opCounts[static_cast<std::size_t>(OpKind::SetCurrentDocument)] == 44 + 11);
  // 44 opens over 43 s fall in the first minute.
  CHECK(r.perUser.at("p18").timeline == std::vector<std::uint64_t>{33});
}

TEST_CASE("corrupt log lines are reported with their line number") {
  TempDir dir("corrupt");
  const fs::path log = dir.path / "bad.oplog.ndjson";
  std::ofstream(log) << json{{"roomConfig", roomConfigToJson(testing::smallConfig())}}.dump()
                     << "\n{\"actor\":\"a\",\"applied\":true\n";
  try {
    analyzeLog(log);
    FAIL("expected LogError");
  } catch (const LogError& e) {
    CHECK(e.code() == LogErrorCode::CorruptLog);
    CHECK(e.line() == 2);
  }
  const fs::path noHeader = dir.path / "nohdr.oplog.ndjson";
  std::ofstream(noHeader) << "{\"seq\":1}\n";
  CHECK_THROWS_AS(analyzeLog(noHeader), LogError);
}

TEST_CASE("report export round trips") {
  const SimulationResult r = runScenario(randomScenario(3, 25, 50));
  TempDir dir("export");

  exportReport(r.report, ReportFormat::Json, dir.path / "r.json");
  CHECK(reportFromJson(json::parse(slurp(dir.path / "r.json"))) == r.report);

  exportReport(r.report, ReportFormat::Csv, dir.path / "r.csv");
  const auto rows = parseReportCsv(slurp(dir.path / "r.csv"));
  std::size_t rowCount = 0;
  std::size_t nonzero = 0;
  for (const auto& [user, kinds] : rows) {
    for (const auto& [kind, n] : kinds) {
      ++rowCount;
      CHECK(n > 0);
      CHECK(r.report.perUser.at(user).opCounts[static_cast<std::size_t>(*parseOpKind(kind))] ==
            n);
    }
  }
  for (const auto& [user, m] : r.report.perUser) {
    for (auto n : m.opCounts) nonzero += n > 0;
  }
  CHECK(rowCount == nonzero);
  const std::string csv = slurp(dir.path / "r.csv");
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == nonzero + 1);

  CHECK(renderReport(MetricsReport{}, ReportFormat::Csv) == "user,opKind,count\n");
  CHECK_THROWS_AS(exportReport(r.report, ReportFormat::Csv, dir.path / "missing" / "r.csv"),
                  IoError);
}

TEST_CASE("csv quotes awkward user names") {
  MetricsReport r;
  r.perUser["smith, \"jo\""].opCounts[0] = 3;
  const std::string csv = renderReport(r, ReportFormat::Csv);
  CHECK(csv == "user,opKind,count\n\"smith, \"\"jo\"\"\",AddNode,3\n");
  CHECK(parseReportCsv(csv).at("smith, \"jo\"").at("AddNode") == 3);
}

TEST_CASE("scenario validation") {
  const json base = json::parse(slurp(scenarioPath("eight-random")));
  const fs::path dir = scenarioPath("x").parent_path();
  CHECK_NOTHROW(scenarioFromJson(base, dir));

  auto broken = [&](auto edit) {
    json j = base;
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(scenarioFromJson(broken([](json& j) { j["clients"] = json::array(); }), dir),
                  ScriptError);
  CHECK_THROWS_AS(
      scenarioFromJson(broken([](json& j) { j["clients"][0]["random"]["mix"] = {{"AddNode", -1}}; }),
                       dir),
      ScriptError);
  CHECK_THROWS_AS(
      scenarioFromJson(broken([](json& j) { j["clients"][0]["random"]["mix"] = {{"AddNode", 0}}; }),
                       dir),
      ScriptError);
  CHECK_THROWS_AS(
      scenarioFromJson(broken([](json& j) { j["clients"][0]["random"]["mix"] = {{"Teleport", 1}}; }),
                       dir),
      ScriptError);
  CHECK_THROWS_AS(scenarioFromJson(broken([](json& j) { j["network"]["dropAwarenessProb"] = 1.5; }),
                                   dir),
                  ScriptError);
  CHECK_THROWS_AS(scenarioFromJson(broken([](json& j) { j["network"]["latencyMinMs"] = 500; }), dir),
                  ScriptError);
  CHECK_THROWS_AS(scenarioFromJson(broken([](json& j) { j["corpus"] = "nope.json"; }), dir),
                  ScriptError);
  CHECK_THROWS_AS(
      scenarioFromJson(broken([](json& j) { j["clients"][0]["script"] = json::array(); }), dir),
      ScriptError);
  CHECK_THROWS_AS(scenarioFromJson(broken([](json& j) { j["clients"][0]["platform"] = "vr"; }), dir),
                  ScriptError);
  CHECK_THROWS_AS(loadScenario(dir / "does-not-exist.json"), ScriptError);
}

TEST_CASE("scenario JSON round trip") {
  for (const char* name : {"two-scripted", "eight-random"}) {
    const ScenarioScript s = loadScenario(scenarioPath(name));
    const json j = scenarioToJson(s);
    const ScenarioScript back = scenarioFromJson(j, {});
    CHECK(scenarioToJson(back) == j);
    CHECK(runScenario(back).serverStateHash == runScenario(s).serverStateHash);
  }
}

TEST_CASE("zero-weight kinds never appear") {
  ScenarioScript s = randomScenario(2, 50, 30);
  for (ClientScript& c : s.clients) {
    auto& b = std::get<RandomBehavior>(c.behavior);
    b.mix = {};
    b.mix[static_cast<std::size_t>(OpKind::AddNode)] = 1;
    b.mix[static_cast<std::size_t>(OpKind::SetCurrentDocument)] = 1;
  }
  const UserMetrics t = runScenario(s).report.totals();
  for (OpKind k : kAllOpKinds) {
    if (k != OpKind::AddNode && k != OpKind::SetCurrentDocument) {
      CHECK(t.opCounts[static_cast<std::size_t>(k)] == 0);
    }
  }
  CHECK(t.nodesCreated == t.opCounts[static_cast<std::size_t>(OpKind::AddNode)]);
  CHECK(t.nodesCreated > 0);
}

TEST_CASE("convergence time is measured on the virtual clock") {
  ScenarioScript s = loadScenario(scenarioPath("two-scripted"));
  const auto fast = runScenario(s).report.convergence.timeToQuiescenceMs;
  s.network.latencyMinMs = s.network.latencyMaxMs = 100;
  const auto slow = runScenario(s).report.convergence.timeToQuiescenceMs;
  // Last op goes out at 1425 ms; at 100 ms each way its outcome lands 200 ms later.
  CHECK(fast == 1425);
  CHECK(slow == 1625);
}
