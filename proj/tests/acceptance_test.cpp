// One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "support/geometry_oracles.hpp"
#include "support/layout_fixtures.hpp"
#include "support/random_ops.hpp"
#include "visrooms/awareness/awareness.hpp"
#include "visrooms/harness/simulator.hpp"

using namespace visrooms;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = VISROOMS_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool sameBits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("visrooms-accept-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Outcome convergence() {
  Outcome o;
  const ScenarioScript s = loadScenario(kSource / "scenarios" / "eight-random.json");
  int total = 0;
  for (const auto& c : s.clients) total += std::get<RandomBehavior>(c.behavior).count;
  if (s.clients.size() != 8 || total != 500 || s.network.latencyMinMs != 0 ||
      s.network.latencyMaxMs != 250) {
    o.fail("scenario is not 8 clients / 500 ops / 0-250 ms");
    return o;
  }
  const auto t0 = Clock::now();
  std::int64_t slowest = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SimulationResult r = simulate(s, {seed, std::nullopt, false});
    slowest = std::max(slowest, r.report.convergence.timeToQuiescenceMs);
    if (!r.report.convergence.converged) o.fail("seed " + std::to_string(seed) + " diverged");
    if (r.opsSequenced != 500) o.fail("seed " + std::to_string(seed) + " sequenced " +
                                      std::to_string(r.opsSequenced));
    for (const auto& [name, c] : r.clients) {
      if (c.stateHash != r.serverStateHash) o.fail(name + " hash differs, seed " + std::to_string(seed));
    }
  }
  const double secs = secondsSince(t0);
  if (secs >= 30.0) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = "20 seeds converged in " + std::to_string(secs) +
               " s; latest quiescence at " + std::to_string(slowest) + " ms virtual";
  }
  return o;
}

// Brute-force structural checks, separate from checkInvariants.
std::string bruteStructure(const GraphState& g) {
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& [id, l] : g.links()) {
    const auto& [a, b] = l.endpoints;
    if (!g.findNode(a) || !g.findNode(b)) return "dangling link " + id.value;
    if (a == b) return "self-loop " + id.value;
    if (!pairs.insert(std::minmax(a, b)).second) return "duplicate pair at " + id.value;
  }
  return {};
}

Outcome fuzz() {
  Outcome o;
  std::size_t rejected = 0;
  for (std::uint64_t seed = 1; seed <= 50 && o.pass; ++seed) {
    std::mt19937_64 rng(seed * 7919);
    GraphState g = testing::fuzzRoom();
    for (std::uint64_t i = 1; i <= 10'000; ++i) {
      const Operation op = testing::randomOperation(rng, g, i);
      if (!g.applyInPlace(op)) ++rejected;
      if (const auto bad = checkInvariants(g); !bad.empty()) {
        o.fail("seed " + std::to_string(seed) + " op " + std::to_string(i) + ": " + bad.front());
        break;
      }
      if (const auto bad = bruteStructure(g); !bad.empty()) {
        o.fail("seed " + std::to_string(seed) + ": " + bad);
        break;
      }
    }
  }
  if (o.pass) o.detail = "500000 ops, " + std::to_string(rejected) + " rejected, no violations";
  return o;
}

Outcome naturalNeighbors() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cfg = testing::randomInteriorConfig(rng, 6, 12);
    std::map<NodeId, Vec2> sites;
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < cfg.sites.size(); ++i) {
      const NodeId id("s" + std::to_string(100 + i));
      sites.emplace(id, cfg.sites[i]);
      index.emplace(id, i);
    }
    const auto w = naturalNeighborWeights2d(cfg.query, sites);
    const auto oracle = testing::rasterLaplaceWeights(cfg.sites, cfg.query);
    std::vector<double> got(cfg.sites.size(), 0.0);
    double sum = 0.0;
    Vec2 rebuilt;
    for (const auto& e : w) {
      got[index.at(e.node)] = e.weight;
      sum += e.weight;
      rebuilt = rebuilt + sites.at(e.node) * e.weight;
    }
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - oracle[i]));
    if (std::abs(sum - 1.0) > 1e-9) o.fail("partition of unity off by " + std::to_string(sum - 1.0));
    if ((rebuilt - cfg.query).norm() > 1e-6) o.fail("linear reproduction off");
    for (const auto& [id, p] : sites) {
      const auto at = naturalNeighborWeights2d(p, sites);
      if (at.size() != 1 || at[0].node != id || at[0].weight != 1.0) o.fail("not exact at " + id.value);
    }
  }
  if (worst > 1e-2) o.fail("raster oracle differs by " + std::to_string(worst));
  const double secs = secondsSince(t0);
  if (secs >= 120.0) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = "100 configs, max raster deviation " + std::to_string(worst) + ", " +
               std::to_string(secs) + " s";
  }
  return o;
}

Outcome layoutProperties() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  Positions3 p3;
  for (int i = 0; i < 500; ++i) p3[NodeId("r" + std::to_string(i))] = {u(rng), u(rng), u(rng)};
  const Positions2 p2 = projectTo2d(p3);
  for (const auto& [id, v] : p3) {
    if (p2.size() != p3.size() || !sameBits(p2.at(id).x, v.x) || !sameBits(p2.at(id).y, v.y)) {
      o.fail("projectTo2d altered a coordinate");
      break;
    }
  }

  const LayoutParams params;
  int clean = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GraphState g;
    const Positions2 input = testing::randomProjection(seed, 100, &g);
    const auto r = resolveOverlaps2d(g, input, params);
    if (r.iterations > 300) o.fail("seed " + std::to_string(seed) + " used " + std::to_string(r.iterations));
    if (countOverlaps(r.positions, params.nodeRadius) == 0) ++clean;
    for (const auto& [id, p] : input) {
      bool alone = true;
      for (const auto& [other, q] : input) {
        if (other != id && std::hypot(p.x - q.x, p.y - q.y) < 2 * params.nodeRadius) alone = false;
      }
      if (alone && (!r.pinned.count(id) || !sameBits(r.positions.at(id).x, p.x) ||
                    !sameBits(r.positions.at(id).y, p.y))) {
        o.fail("non-overlapping node moved, seed " + std::to_string(seed));
      }
    }
    if (seed <= 10) {
      const auto again = resolveOverlaps2d(g, input, params);
      LayoutParams lp;
      lp.seed = seed;
      if (again.positions != r.positions || layout3d(g, lp) != layout3d(g, lp)) {
        o.fail("not deterministic, seed " + std::to_string(seed));
      }
    }
  }
  if (clean < 95) o.fail("zero overlaps in only " + std::to_string(clean) + " of 100 seeds");
  if (o.pass) o.detail = "zero overlaps in " + std::to_string(clean) + "/100 seeds";
  return o;
}

Outcome frustums() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    HeadPose p;
    p.position = {20 * u(rng), 20 * u(rng), 10 + 9 * u(rng)};
    p.orientation = testing::randomUnitQuat(rng);
    p.horizontalFov = 1.0 + 0.6 * u(rng);
    p.verticalFov = 0.8 + 0.5 * u(rng);
    const MapTransform map{0.5 + u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.5 + u(rng),
                           100 * u(rng), 100 * u(rng)};
    try {
      const auto f = frustumFromPose(UserId("u"), p, {1, 2, 3});
      const auto m = projectFrustumToMinimap(f, map);
      for (int k = 0; k < 4; ++k) {
        const Vec2 hit = testing::rayPlaneOracle(f.apex, f.cornerRays[k], kFrustumFarDistance);
        if (!testing::closeRel(m.polygon[k], map.apply(hit), 1e-9)) {
          o.fail("pose " + std::to_string(trial) + " corner " + std::to_string(k));
        }
      }
    } catch (const AwarenessError& e) {
      o.fail(std::string("pose ") + std::to_string(trial) + ": " + e.what());
    }
  }
  if (o.pass) o.detail = "1000 poses within 1e-9";
  return o;
}

Outcome logRoundTrip() {
  Outcome o;
  const ScenarioScript s = loadScenario(kSource / "scenarios" / "eight-random.json");
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    TempDir dir;
    const SimulationResult r = simulate(s, {seed, dir.path, false});
    const std::string tag = "seed " + std::to_string(seed);
    if (!r.logPath) {
      o.fail(tag + ": no log");
      continue;
    }
    const ReplayedLog replay = loadLog(*r.logPath);
    if (stateHash(replay.state) != r.serverStateHash) o.fail(tag + ": replay hash differs");
    if (replay.entries.size() != r.opsSequenced) o.fail(tag + ": entry count differs");
    if (analyzeLog(*r.logPath).perUser != r.report.perUser) o.fail(tag + ": analyzeLog differs");
  }
  if (o.pass) o.detail = "20 seeds replayed to the server hash; counts equal";
  return o;
}

// Whitespace-separated tokens, counted from the raw file text.
std::vector<std::size_t> rawWordCounts(const fs::path& corpus) {
  const auto j = nlohmann::json::parse(std::ifstream(corpus));
  std::vector<std::size_t> out;
  for (const auto& d : j.at("documents")) {
    std::istringstream in(d.at("body").get<std::string>());
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    out.push_back(n);
  }
  return out;
}

Outcome fixtureShape() {
  Outcome o;
  const std::vector<std::size_t> prelim{813, 779, 805};
  const std::vector<std::string> prelimNames{"prelim-a", "prelim-b", "prelim-c"};
  for (std::size_t i = 0; i < 3; ++i) {
    const fs::path p = kSource / "corpora" / (prelimNames[i] + ".json");
    const RoomConfig c = loadRoomConfig(p);
    std::size_t words = 0;
    for (const auto& d : c.documents) words += d.wordCount;
    const auto raw = rawWordCounts(p);
    const std::size_t rawWords = std::accumulate(raw.begin(), raw.end(), std::size_t{0});
    if (c.documents.size() != 6) o.fail(prelimNames[i] + " has " + std::to_string(c.documents.size()) + " docs");
    if (words != prelim[i] || rawWords != prelim[i]) {
      o.fail(prelimNames[i] + " has " + std::to_string(words) + " words");
    }
  }
  const std::vector<std::pair<std::string, std::size_t>> study{{"study-drug", 2583},
                                                               {"study-wildlife", 2518}};
  for (const auto& [name, total] : study) {
    const fs::path p = kSource / "corpora" / (name + ".json");
    const RoomConfig c = loadRoomConfig(p);
    std::size_t words = 0;
    for (const auto& d : c.documents) words += d.wordCount;
    const auto raw = rawWordCounts(p);
    if (c.documents.size() != 15) o.fail(name + " has " + std::to_string(c.documents.size()) + " docs");
    if (words != total || std::accumulate(raw.begin(), raw.end(), std::size_t{0}) != total) {
      o.fail(name + " has " + std::to_string(words) + " words");
    }
  }

  const Vec3 center{0, 1.6, 0};
  for (const char* name : {"prelim-a", "study-drug"}) {
    const RoomConfig c = loadRoomConfig(kSource / "corpora" / (std::string(name) + ".json"));
    std::vector<DocumentId> ids;
    for (const auto& d : c.documents) ids.push_back(d.id);
    const auto poses = semicircleDocLayout(ids, c.semicircleRadius, center);
    const std::size_t n = ids.size();
    if (poses.size() != n) {
      o.fail(std::string(name) + ": pose count");
      continue;
    }
    // Evenly spaced: equal angular steps of pi/n, all at the radius.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = poses[i].center - center;
      const double r = std::hypot(d.x, d.z);
      const double angle = std::atan2(d.z, d.x);
      const double expect = M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      if (std::abs(r - c.semicircleRadius) > 1e-9 || std::abs(angle - expect) > 1e-9 ||
          poses[i].center.y != center.y) {
        o.fail(std::string(name) + ": pose " + std::to_string(i) + " off the even spacing");
      }
    }
  }
  if (o.pass) o.detail = "5 corpora; 6 and 15 evenly spaced panel poses";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"convergence-suite", convergence},
      {"graph-core-fuzz", fuzz},
      {"natural-neighbor-oracle", naturalNeighbors},
      {"layout-properties", layoutProperties},
      {"frustum-projection", frustums},
      {"log-round-trip", logRoundTrip},
      {"fixture-shape", fixtureShape},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("threw: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " ["
              << static_cast<int>(secondsSince(t0)) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
