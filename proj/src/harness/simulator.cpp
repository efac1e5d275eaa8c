#include "visrooms/harness/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <thread>

#include "visrooms/sync/client_replica.hpp"

namespace visrooms {

using nlohmann::json;

namespace {

constexpr std::int64_t kTickMs = 10;

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return n == 0 ? 0 : rng() % n; }

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::int64_t between(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

struct SimClient {
  std::size_t index = 0;
  const ClientScript* script = nullptr;
  ConnectionId conn = 0;
  std::mt19937_64 rng;
  // Cursor and head pose draws, kept apart from the op stream.
  std::mt19937_64 cursorRng;
  ClientReplica replica;
  std::optional<UserId> user;
  // Ops still to send: random count left, or the next scripted index.
  int randomLeft = 0;
  std::size_t nextScripted = 0;
  std::uint64_t sent = 0;
  ClientOutcome outcome;

  bool joined() const { return user.has_value(); }
  bool done() const {
    if (const auto* ops = std::get_if<std::vector<ScriptedOp>>(&script->behavior)) {
      return joined() && nextScripted == ops->size();
    }
    return joined() && randomLeft == 0;
  }
};

enum class EventKind { ToServer, ToClient, Join, Act, Publish, Tick };

struct Event {
  std::int64_t t = 0;
  std::uint64_t order = 0;
  EventKind kind = EventKind::Tick;
  std::size_t client = 0;
  WireMessage message;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.order > b.order;
  }
};

class Simulation : private MessageSink {
 public:
  Simulation(const ScenarioScript& script, const SimulationOptions& options)
      : script_(script),
        options_(options),
        seed_(options.seed.value_or(script.seed)),
        net_(seeded({seed_, 0x6e6574})),
        lossyNet_(seeded({seed_, 0x6177617265})),
        hub_(hubOptions(), *this) {
    if (options_.logDir) {
      std::filesystem::create_directories(*options_.logDir);
      std::filesystem::remove(oplogPath(*options_.logDir, script_.room.roomId));
    }
    hub_.addRoom(script_.room);
    for (std::size_t i = 0; i < script_.clients.size(); ++i) {
      SimClient c;
      c.index = i;
      c.script = &script_.clients[i];
      c.conn = i + 1;
      std::uint64_t behaviorSeed = 0;
      if (const auto* r = std::get_if<RandomBehavior>(&c.script->behavior)) {
        behaviorSeed = r->seed;
        c.randomLeft = r->count;
      }
      c.rng = seeded({seed_, behaviorSeed, i});
      c.cursorRng = seeded({seed_, behaviorSeed, i, 0x637572});
      clients_.push_back(std::move(c));
    }
    links_.assign(clients_.size() * 4, 0);
  }

  SimulationResult run() {
    for (const SimClient& c : clients_) schedule(c.script->joinAtMs, EventKind::Join, c.index);
    schedule(0, EventKind::Tick, 0);
    const auto started = std::chrono::steady_clock::now();

    std::optional<std::int64_t> quietAt;
    while (!queue_.empty()) {
      Event e = queue_.top();
      if (quietAt && e.t > *quietAt + kQuiescenceWindowMs) break;
      queue_.pop();
      if (options_.wallClock) {
        std::this_thread::sleep_until(started + std::chrono::milliseconds(e.t));
      }
      now_ = e.t;
      dispatch(e);
      if (!quietAt && inFlight_ == 0 &&
          std::all_of(clients_.begin(), clients_.end(), [](const SimClient& c) { return c.done(); })) {
        quietAt = lastOutcomeAt_;
      }
    }
    return finish(quietAt.value_or(now_));
  }

 private:
  HubOptions hubOptions() const {
    HubOptions h;
    h.logDir = options_.logDir;
    return h;
  }

  void schedule(std::int64_t t, EventKind kind, std::size_t client, WireMessage m = {}) {
    queue_.push({t, order_++, kind, client, std::move(m)});
  }

  // FIFO per direction and channel: a message never overtakes an earlier one
  // on its link. Awareness rides its own lossy channel with its own draws, so
  // what happens to it cannot shift op timing.
  std::size_t link(const SimClient& c, bool toClient, const WireMessage& m) const {
    return 4 * c.index + 2 * (m.type == MessageType::Awareness) + toClient;
  }

  std::int64_t arrival(std::size_t link, const WireMessage& m) {
    const NetworkModel& n = script_.network;
    std::mt19937_64& rng = m.type == MessageType::Awareness ? lossyNet_ : net_;
    std::int64_t t = now_ + between(rng, n.latencyMinMs, n.latencyMaxMs);
    if (n.jitterMs > 0) t += between(rng, 0, n.jitterMs);
    t = std::max(t, links_[link]);
    links_[link] = t;
    return t;
  }

  bool dropped(const WireMessage& m) {
    if (m.type != MessageType::Awareness || script_.network.dropAwarenessProb <= 0.0) return false;
    return unit(lossyNet_) < script_.network.dropAwarenessProb;
  }

  void toServer(SimClient& c, WireMessage m) {
    if (dropped(m)) return;
    ++inFlight_;
    const std::int64_t t = arrival(link(c, false, m), m);
    schedule(t, EventKind::ToServer, c.index, std::move(m));
  }

  // Hub output. Live metrics are counted here, from the actor's own copy.
  void send(ConnectionId to, const WireMessage& m) override {
    SimClient& c = clients_.at(to - 1);
    if (m.type == MessageType::OpApplied || m.type == MessageType::OpRejected) {
      const Operation op = operationFromJson(m.body.at("op"));
      if (c.user && op.actor == *c.user) {
        LoggedOp entry{op, std::nullopt};
        if (m.type == MessageType::OpRejected) {
          entry.rejected = parseRejectReason(m.body.at("reason").get<std::string>());
        }
        live_.record(entry);
      }
    }
    if (dropped(m)) return;
    if (m.type != MessageType::Awareness) ++inFlight_;
    schedule(arrival(link(c, true, m), m), EventKind::ToClient, c.index, m);
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::Tick:
        hub_.tick(now_);
        schedule(now_ + kTickMs, EventKind::Tick, 0);
        break;
      case EventKind::ToServer:
        --inFlight_;
        hub_.handle(clients_[e.client].conn, e.message, now_);
        break;
      case EventKind::ToClient:
        receive(clients_[e.client], e.message);
        break;
      case EventKind::Join: {
        SimClient& c = clients_[e.client];
        toServer(c, {MessageType::Join, script_.room.roomId,
                     {{"name", c.script->name}, {"platform", platformName(c.script->platform)}}});
        break;
      }
      case EventKind::Act:
        act(clients_[e.client]);
        break;
      case EventKind::Publish:
        publish(clients_[e.client]);
        break;
    }
  }

  void receive(SimClient& c, const WireMessage& m) {
    if (m.type != MessageType::Awareness) {
      --inFlight_;
      lastOutcomeAt_ = now_;
    }
    switch (m.type) {
      case MessageType::JoinAck:
        c.user = UserId(m.body.at("userId").get<std::string>());
        c.replica.loadSnapshot(m.body.at("snapshot"));
        startActing(c);
        break;
      case MessageType::OpApplied:
        c.replica.onOpApplied(m.body);
        break;
      case MessageType::OpRejected:
        ++c.outcome.rejectedSeen;
        break;
      case MessageType::Awareness:
        ++c.outcome.awarenessReceived;
        c.replica.onAwareness(m.body);
        break;
      default:
        break;
    }
  }

  void startActing(SimClient& c) {
    if (const auto* ops = std::get_if<std::vector<ScriptedOp>>(&c.script->behavior)) {
      for (std::size_t i = 0; i < ops->size(); ++i) {
        schedule(std::max(now_, (*ops)[i].atMs), EventKind::Act, c.index);
      }
    } else if (c.randomLeft > 0) {
      schedule(now_ + thinkTime(c), EventKind::Act, c.index);
    }
    if (c.script->awarenessIntervalMs > 0 && !c.done()) {
      schedule(now_ + c.script->awarenessIntervalMs, EventKind::Publish, c.index);
    }
  }

  std::int64_t thinkTime(SimClient& c) {
    const auto& r = std::get<RandomBehavior>(c.script->behavior);
    return between(c.rng, 1, 2 * r.meanIntervalMs);
  }

  void act(SimClient& c) {
    OpPayload payload;
    if (const auto* ops = std::get_if<std::vector<ScriptedOp>>(&c.script->behavior)) {
      payload = (*ops)[c.nextScripted++].payload;
    } else {
      payload = randomPayload(c);
      if (--c.randomLeft > 0) schedule(now_ + thinkTime(c), EventKind::Act, c.index);
    }
    ++c.sent;
    toServer(c, {MessageType::OpSubmit, script_.room.roomId,
                 {{"kind", opKindName(payloadKind(payload))},
                  {"payload", payloadToJson(payload)},
                  {"clientRef", c.sent}}});
  }

  Vec3 randomPosition(SimClient& c) {
    return {unit(c.rng) * 200.0 - 100.0, unit(c.rng) * 200.0 - 100.0,
            unit(c.rng) * 200.0 - 100.0};
  }

  // Built from the client's possibly stale view, so some ops get rejected.
  OpPayload randomPayload(SimClient& c) {
    const auto& r = std::get<RandomBehavior>(c.script->behavior);
    const double total = std::accumulate(r.mix.begin(), r.mix.end(), 0.0);
    double pick = unit(c.rng) * total;
    std::size_t k = 0;
    while (k + 1 < kOpKindCount && (r.mix[k] == 0.0 || pick >= r.mix[k])) {
      pick -= r.mix[k];
      ++k;
    }
    OpKind kind = kAllOpKinds[k];

    const GraphState& g = c.replica.graph();
    std::vector<NodeId> nodes;
    std::vector<NodeId> free;
    for (const auto& [id, n] : g.nodes()) {
      nodes.push_back(id);
      if (!n.isDocAnchor) free.push_back(id);
    }
    std::vector<LinkId> links;
    for (const auto& [id, l] : g.links()) links.push_back(id);
    auto anyOf = [&](const auto& v) { return v[below(c.rng, v.size())]; };
    if ((kind == OpKind::RelabelLink || kind == OpKind::DeleteLink) && links.empty()) {
      kind = OpKind::AddLink;
    }
    if ((kind == OpKind::MergeNodes || kind == OpKind::DeleteNode) && free.empty()) {
      kind = OpKind::AddNode;
    }
    if (nodes.empty()) kind = OpKind::AddNode;

    const std::string tag = c.script->name + "-" + std::to_string(c.sent + 1);
    switch (kind) {
      case OpKind::AddNode:
        return ops::AddNode{"node " + tag, randomPosition(c), std::nullopt};
      case OpKind::MoveNode:
        return ops::MoveNode{anyOf(nodes), randomPosition(c)};
      case OpKind::RenameNode:
        return ops::RenameNode{anyOf(nodes), "renamed " + tag};
      case OpKind::MergeNodes:
        return ops::MergeNodes{anyOf(free), anyOf(free.size() > 1 ? free : nodes)};
      case OpKind::DeleteNode:
        return ops::DeleteNode{anyOf(free)};
      case OpKind::AddLink:
        return ops::AddLink{anyOf(nodes), anyOf(nodes), "link " + tag};
      case OpKind::RelabelLink:
        return ops::RelabelLink{anyOf(links), "relabeled " + tag};
      case OpKind::DeleteLink:
        return ops::DeleteLink{anyOf(links)};
      case OpKind::SelectNode:
        return ops::SelectNode{anyOf(nodes)};
      case OpKind::DeselectNode:
        return ops::DeselectNode{};
      case OpKind::SetCurrentDocument: {
        if (below(c.rng, 7) == 0) return ops::SetCurrentDocument{std::nullopt};
        return ops::SetCurrentDocument{anyOf(script_.room.documents).id};
      }
    }
    return ops::DeselectNode{};
  }

  // Cursor over the client's own 2D layout; spatial clients add a head pose.
  void publish(SimClient& c) {
    if (c.done()) return;
    schedule(now_ + c.script->awarenessIntervalMs, EventKind::Publish, c.index);
    const Positions2& sites = c.replica.layout().positions2;
    if (sites.empty()) return;
    Vec2 lo = sites.begin()->second;
    Vec2 hi = lo;
    for (const auto& [id, p] : sites) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Vec2 q{lo.x + unit(c.cursorRng) * (hi.x - lo.x), lo.y + unit(c.cursorRng) * (hi.y - lo.y)};
    AwarenessUpdate u;
    u.timestamp = now_;
    u.cursor = CursorHint{naturalNeighborWeights2d(q, sites), c.script->platform, now_};
    if (c.script->platform == Platform::Spatial3d) {
      const double yaw = unit(c.cursorRng) * 2.0 * M_PI;
      u.headPose = HeadPose{{std::cos(yaw) * 150.0, 0.0, std::sin(yaw) * 150.0},
                            Quat::fromAxisAngle({0.0, 1.0, 0.0}, yaw), 1.2, 1.6};
    }
    toServer(c, {MessageType::Awareness, script_.room.roomId, awarenessUpdateToJson(u)});
  }

  SimulationResult finish(std::int64_t quietAt) {
    SimulationResult r;
    std::vector<std::uint64_t> serverSeqs;
    LayoutResult serverLayout;
    hub_.withRoom(script_.room.roomId, [&](const Room& room) {
      r.serverStateHash = stateHash(room.graph());
      r.serverVersion = room.graph().version();
      r.opsSequenced = room.history().size();
      serverLayout = room.layout();
      for (const LoggedOp& e : room.history()) {
        if (e.applied()) serverSeqs.push_back(e.op.seq);
      }
    });

    bool converged = true;
    for (SimClient& c : clients_) {
      c.outcome.stateHash = c.replica.stateHash();
      c.outcome.version = c.replica.version();
      c.outcome.staleAwareness = c.replica.staleAwareness();
      const bool same = c.replica.hasSnapshot() && c.outcome.stateHash == r.serverStateHash &&
                        c.replica.layout() == serverLayout && c.replica.pendingDeltas() == 0;
      if (!same) {
        converged = false;
        // Compare against what this client should have seen since its snapshot.
        const auto& seen = c.replica.appliedSeqs();
        const std::size_t from = std::min<std::size_t>(c.replica.snapshotVersion(), serverSeqs.size());
        std::optional<std::uint64_t> first;
        for (std::size_t i = 0; from + i < serverSeqs.size(); ++i) {
          if (i >= seen.size() || seen[i] != serverSeqs[from + i]) {
            first = serverSeqs[from + i];
            break;
          }
        }
        if (!first) first = serverSeqs.empty() ? 0 : serverSeqs.back();
        r.firstDivergentSeq = std::min(r.firstDivergentSeq.value_or(*first), *first);
      }
      r.clients[c.script->name] = c.outcome;
    }
    r.report = live_;
    r.report.convergence = {converged, quietAt};
    if (options_.logDir) r.logPath = oplogPath(*options_.logDir, script_.room.roomId);
    return r;
  }

  const ScenarioScript& script_;
  SimulationOptions options_;
  std::uint64_t seed_;
  std::mt19937_64 net_;
  std::mt19937_64 lossyNet_;
  Hub hub_;
  std::vector<SimClient> clients_;
  std::vector<std::int64_t> links_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t order_ = 0;
  std::int64_t now_ = 0;
  std::int64_t inFlight_ = 0;
  std::int64_t lastOutcomeAt_ = 0;
  MetricsReport live_;
};

}  // namespace

SimulationResult simulate(const ScenarioScript& script, const SimulationOptions& options) {
  return Simulation(script, options).run();
}

SimulationResult runScenario(const ScenarioScript& script, const SimulationOptions& options) {
  SimulationResult r = simulate(script, options);
  if (!r.report.convergence.converged) {
    const std::string seq =
        r.firstDivergentSeq ? std::to_string(*r.firstDivergentSeq) : std::string("?");
    throw NonConvergence(std::move(r), "clients diverged from the server; first divergent seq " + seq);
  }
  return r;
}

}  // namespace visrooms
