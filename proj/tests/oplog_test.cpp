#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "support/random_ops.hpp"
#include "support/sync_fixtures.hpp"

using namespace visrooms;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("visrooms-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string readAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeAll(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// Plays `count` random ops through a logged room; returns the final graph.
GraphState playLogged(const fs::path& log, std::uint64_t seed, int count) {
  Room room(testing::smallConfig());
  room.attachLog(std::make_unique<OpLogWriter>(OpLogWriter::create(log, room.config())));
  const UserId a = room.join("a", Platform::Spatial3d, 0).session.id;
  const UserId b = room.join("b", Platform::Flat2d, 0).session.id;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count;) {
    const Operation op = testing::randomOperation(rng, room.graph(), 0);
    try {
      room.submit(i % 3 == 0 ? b : a, op.payload, i * 10);
      ++i;
    } catch (const SyncError&) {
      // Non-finite positions never reach the log.
    }
  }
  return room.graph();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("log round trip reproduces the state hash") {
  TempDir dir("roundtrip");
  const fs::path log = oplogPath(dir.path, "r");
  const GraphState live = playLogged(log, 3, 120);
  const ReplayedLog replay = loadLog(log);
  CHECK(!replay.error);
  CHECK(replay.config == testing::smallConfig());
  CHECK(replay.entries.size() == 120);
  CHECK(stateHash(replay.state) == stateHash(live));
  CHECK(replay.state == live);
}

TEST_CASE("version equals the independently counted applied lines") {
  TempDir dir("count");
  const fs::path log = oplogPath(dir.path, "r");
  playLogged(log, 11, 500);
  // Plain text scan, no JSON parsing.
  std::size_t applied = 0;
  std::size_t rejected = 0;
  for (const std::string& l : lines(readAll(log))) {
    if (l.find("\"applied\":true") != std::string::npos) ++applied;
    if (l.find("\"applied\":false") != std::string::npos) ++rejected;
  }
  CHECK(applied + rejected == 500);
  CHECK(rejected > 0);
  CHECK(loadLog(log).state.version() == applied);
}

TEST_CASE("truncated last line is reported and earlier state recovered") {
  TempDir dir("trunc");
  const fs::path log = oplogPath(dir.path, "r");
  playLogged(log, 5, 40);
  const std::string full = readAll(log);
  const auto all = lines(full);

  // Cut the final entry in half, as a crash mid-write would.
  const std::string cut = full.substr(0, full.size() - all.back().size() / 2 - 1);
  writeAll(log, cut);
  const ReplayedLog replay = replayLog(log);
  REQUIRE(replay.error);
  CHECK(replay.error->code() == LogErrorCode::CorruptLog);
  CHECK(replay.error->line() == all.size());
  CHECK(replay.entries.size() == 39);

  // Oracle: the same log without its last line.
  std::string prefix;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) prefix += all[i] + "\n";
  writeAll(log, prefix);
  const ReplayedLog clean = loadLog(log);
  CHECK(stateHash(clean.state) == stateHash(replay.state));

  writeAll(log, cut);
  try {
    loadLog(log);
    FAIL("expected CorruptLog");
  } catch (const LogError& e) {
    CHECK(e.code() == LogErrorCode::CorruptLog);
    CHECK(e.line() == all.size());
  }
}

TEST_CASE("garbage in the middle and seq gaps") {
  TempDir dir("gap");
  const fs::path log = oplogPath(dir.path, "r");
  playLogged(log, 8, 20);
  auto all = lines(readAll(log));

  auto rewrite = [&](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    writeAll(log, s);
  };

  auto gap = all;
  gap.erase(gap.begin() + 6);
  rewrite(gap);
  ReplayedLog r = replayLog(log);
  REQUIRE(r.error);
  CHECK(r.error->code() == LogErrorCode::SeqGap);
  CHECK(r.error->line() == 7);
  CHECK(r.entries.size() == 5);

  auto garbage = all;
  garbage[3] = "{\"seq\": oops";
  rewrite(garbage);
  r = replayLog(log);
  REQUIRE(r.error);
  CHECK(r.error->code() == LogErrorCode::CorruptLog);
  CHECK(r.error->line() == 4);

  // An entry whose recorded outcome disagrees with the replay.
  auto lied = all;
  for (std::size_t i = 1; i < lied.size(); ++i) {
    auto j = nlohmann::json::parse(lied[i]);
    if (j.at("applied").get<bool>()) {
      j["applied"] = false;
      j["rejectReason"] = "UnknownNode";
      lied[i] = j.dump();
      rewrite(lied);
      r = replayLog(log);
      REQUIRE(r.error);
      CHECK(r.error->code() == LogErrorCode::CorruptLog);
      CHECK(r.error->line() == i + 1);
      break;
    }
  }

  writeAll(log, "not a header\n");
  CHECK_THROWS_AS(replayLog(log), LogError);
}

TEST_CASE("logged op JSON") {
  LoggedOp e;
  e.op.seq = 4;
  e.op.actor = UserId("ana");
  e.op.payload = ops::RenameNode{NodeId("r:n1"), "Gator"};
  e.op.timestamp = 1234;
  e.rejected = RejectReason::UnknownNode;
  const auto j = loggedOpToJson(e);
  CHECK(j.at("applied") == false);
  CHECK(j.at("rejectReason") == "UnknownNode");
  CHECK(loggedOpToJson(loggedOpFromJson(j)) == j);
  e.rejected.reset();
  CHECK(loggedOpToJson(loggedOpFromJson(loggedOpToJson(e))) == loggedOpToJson(e));
  auto bad = loggedOpToJson(e);
  bad["rejectReason"] = "UnknownNode";
  CHECK_THROWS_AS(loggedOpFromJson(bad), OperationFormatError);
}

TEST_CASE("hub persists, resumes and writes snapshots") {
  TempDir dir("hub");
  HubOptions options;
  options.logDir = dir.path;
  std::string hashBefore;
  {
    testing::RecordingSink sink;
    Hub hub(options, sink);
    hub.addRoom(testing::smallConfig());
    hub.handle(1, testing::joinMessage("r", "a"), 0);
    for (int i = 0; i < 5; ++i) {
      hub.handle(1, testing::submitMessage("r", ops::AddNode{"n", {}, std::nullopt}), i);
    }
    hub.withRoom("r", [&](const Room& r) { hashBefore = stateHash(r.graph()); });
    hub.disconnect(1, 10);
    CHECK(fs::exists(snapshotPath(dir.path, "r")));
  }
  // Leave a half-written line behind; the resumed log drops it.
  {
    std::ofstream out(oplogPath(dir.path, "r"), std::ios::app | std::ios::binary);
    out << "{\"seq\":6,";
  }
  {
    testing::RecordingSink sink;
    Hub hub(options, sink);
    hub.addRoom(testing::smallConfig());
    hub.withRoom("r", [&](const Room& r) {
      CHECK(stateHash(r.graph()) == hashBefore);
      CHECK(r.nextSeq() == 6);
    });
    hub.handle(1, testing::joinMessage("r", "a"), 20);
    hub.handle(1, testing::submitMessage("r", ops::AddNode{"m", {}, std::nullopt}), 21);
  }
  const ReplayedLog replay = loadLog(oplogPath(dir.path, "r"));
  CHECK(replay.entries.size() == 6);
  CHECK(replay.state.version() == 6);
  const auto snap = nlohmann::json::parse(readAll(snapshotPath(dir.path, "r")));
  CHECK(snap.at("nextSeq") == 7);
  CHECK(GraphState::fromCanonicalJson(snap.at("graph")) == replay.state);
}
