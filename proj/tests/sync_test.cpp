#include <doctest.h>

#include <random>

#include "support/random_ops.hpp"
#include "support/sync_fixtures.hpp"
#include "visrooms/sync/client_replica.hpp"

using namespace visrooms;
using testing::RecordingSink;
using testing::joinMessage;
using testing::smallConfig;
using testing::submitMessage;

namespace {

NodeId addedNode(const SubmitOutcome& o) {
  REQUIRE(o.applied());
  REQUIRE(o.graphDelta.upsertNodes.size() >= 1);
  return o.graphDelta.upsertNodes.front().id;
}

CursorHint hintAt(const NodeId& n, std::int64_t ts) {
  return {{{n, 1.0}}, Platform::Flat2d, ts};
}

}  // namespace

TEST_CASE("colors follow join order and are recycled") {
  Room room(smallConfig());
  const auto a = room.join("ana", Platform::Flat2d, 0);
  const auto b = room.join("bo", Platform::Spatial3d, 0);
  CHECK(a.session.color == kPalette[0]);
  CHECK(b.session.color == kPalette[1]);
  room.leave(a.session.id, 10);
  const auto c = room.join("cy", Platform::Flat2d, 20);
  CHECK(c.session.color == kPalette[0]);
  CHECK(!c.warning);
}

TEST_CASE("name collisions get a suffix and a warning") {
  Room room(smallConfig());
  room.join("ana", Platform::Flat2d, 0);
  const auto second = room.join("ana", Platform::Flat2d, 0);
  CHECK(second.session.id.value == "ana-2");
  REQUIRE(second.warning);
  CHECK(second.warning->find("ana-2") != std::string::npos);
  CHECK(room.join("ana", Platform::Flat2d, 0).session.id.value == "ana-3");
}

TEST_CASE("ninth joiner is refused") {
  Room room(smallConfig());
  for (int i = 0; i < 8; ++i) room.join("u" + std::to_string(i), Platform::Flat2d, 0);
  try {
    room.join("late", Platform::Flat2d, 0);
    FAIL("expected RoomFull");
  } catch (const SyncError& e) {
    CHECK(e.code() == SyncErrorCode::RoomFull);
  }
  CHECK_THROWS_AS(Room(smallConfig()).join("", Platform::Flat2d, 0), SyncError);
}

TEST_CASE("15-document corpus snapshot has 15 anchors") {
  const RoomConfig config = loadRoomConfig(testing::corpusPath("study-drug"));
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(config);
  hub.handle(1, joinMessage(config.roomId, "ana"), 0);
  const auto acks = sink.to(1, MessageType::JoinAck);
  REQUIRE(acks.size() == 1);
  const auto snap = acks[0].body.at("snapshot");
  ClientReplica replica;
  replica.loadSnapshot(snap);
  CHECK(replica.graph().documentAnchors().size() == 15);
  std::size_t anchors = 0;
  for (const auto& [id, n] : replica.graph().nodes()) anchors += n.isDocAnchor ? 1 : 0;
  CHECK(anchors == 15);
  CHECK(snap.at("documents").size() == 15);
  CHECK(snap.at("panelPoses").size() == 15);
  CHECK(snap.at("sessions").size() == 1);
  CHECK(acks[0].body.at("color") == nlohmann::json({kPalette[0].r, kPalette[0].g, kPalette[0].b}));
}

TEST_CASE("submit sequences, applies and relayouts") {
  Room room(smallConfig());
  const UserId ana = room.join("ana", Platform::Flat2d, 0).session.id;
  CHECK_THROWS_AS(room.submit(UserId("ghost"), ops::DeselectNode{}, 0), SyncError);

  const auto first = room.submit(ana, ops::AddNode{"Alligator", {5, 5, 5}, std::nullopt}, 10);
  CHECK(first.entry.op.seq == 1);
  CHECK(first.entry.op.timestamp == 10);
  CHECK(first.graphDelta.version == 1);
  CHECK(room.graph().version() == 1);
  CHECK(room.layout().version == 1);
  CHECK(room.layout().positions3.size() == room.graph().nodes().size());
  CHECK(room.layout().positions2.size() == room.graph().nodes().size());
  CHECK(first.layoutDelta.upserts.contains(addedNode(first)));

  const auto bad = room.submit(ana, ops::DeleteNode{NodeId("nope")}, 20);
  CHECK(!bad.applied());
  CHECK(*bad.entry.rejected == RejectReason::UnknownNode);
  CHECK(bad.entry.op.seq == 2);
  CHECK(room.nextSeq() == 3);
  CHECK(room.graph().version() == 1);
  CHECK(room.history().size() == 2);

  // Not representable in JSON, so refused before sequencing.
  CHECK_THROWS_AS(room.submit(ana, ops::MoveNode{addedNode(first), {std::nan(""), 0, 0}}, 30),
                  SyncError);
  CHECK(room.nextSeq() == 3);
}

TEST_CASE("default link only for spatial users with a document open") {
  Room room(smallConfig());
  const UserId flat = room.join("flat", Platform::Flat2d, 0).session.id;
  const UserId vr = room.join("vr", Platform::Spatial3d, 0).session.id;

  const auto noDoc = room.submit(vr, ops::AddNode{"x", {}, std::nullopt}, 0);
  CHECK(noDoc.graphDelta.upsertLinks.empty());

  REQUIRE(room.submit(vr, ops::SetCurrentDocument{DocumentId("d1")}, 0).applied());
  REQUIRE(room.submit(flat, ops::SetCurrentDocument{DocumentId("d1")}, 0).applied());
  const auto flatAdd = room.submit(flat, ops::AddNode{"y", {}, std::nullopt}, 0);
  CHECK(flatAdd.graphDelta.upsertLinks.empty());

  const auto vrAdd = room.submit(vr, ops::AddNode{"brown", {}, std::nullopt}, 0);
  REQUIRE(vrAdd.graphDelta.upsertLinks.size() == 1);
  const LinkRecord& link = vrAdd.graphDelta.upsertLinks[0];
  CHECK(link.isDefaultDocLink);
  const NodeId anchor = *room.graph().anchorFor(DocumentId("d1"));
  CHECK(link.touches(anchor));
  CHECK(link.touches(addedNode(vrAdd)));
}

TEST_CASE("MoveNode keeps the rest of the layout") {
  Room room(smallConfig());
  const UserId ana = room.join("ana", Platform::Flat2d, 0).session.id;
  const NodeId n = addedNode(room.submit(ana, ops::AddNode{"n", {}, std::nullopt}, 0));
  const LayoutResult before = room.layout();
  const auto moved = room.submit(ana, ops::MoveNode{n, {40, -7, 3}}, 0);
  REQUIRE(moved.applied());
  REQUIRE(moved.layoutDelta.upserts.size() == 1);
  CHECK(moved.layoutDelta.upserts.at(n).position3 == Vec3{40, -7, 3});
  CHECK(moved.layoutDelta.upserts.at(n).position2 == Vec2{40, -7});
  CHECK(moved.layoutDelta.version == 3 - 1);
  for (const auto& [id, p] : before.positions3) {
    if (id != n) CHECK(room.layout().positions3.at(id) == p);
  }
  CHECK(room.layout().version == room.graph().version());
}

TEST_CASE("concurrent DeleteNode: one applied, one rejected, either order") {
  for (const bool aFirst : {true, false}) {
    CAPTURE(aFirst);
    RecordingSink sink;
    Hub hub({}, sink);
    hub.addRoom(smallConfig());
    hub.handle(1, joinMessage("r", "a"), 0);
    hub.handle(2, joinMessage("r", "b"), 0);
    hub.handle(1, submitMessage("r", ops::AddNode{"X", {}, std::nullopt}), 0);
    const auto applied = sink.to(1, MessageType::OpApplied);
    REQUIRE(applied.size() == 1);
    const NodeId x(applied[0].body.at("graphDelta").at("upsertNodes").at(0).at("id"));
    sink.clear();

    const ConnectionId first = aFirst ? 1 : 2;
    const ConnectionId second = aFirst ? 2 : 1;
    hub.handle(first, submitMessage("r", ops::DeleteNode{x}), 5);
    hub.handle(second, submitMessage("r", ops::DeleteNode{x}), 5);

    CHECK(sink.to(1, MessageType::OpApplied).size() == 1);
    CHECK(sink.to(2, MessageType::OpApplied).size() == 1);
    CHECK(sink.to(first, MessageType::OpRejected).empty());
    const auto rejected = sink.to(second, MessageType::OpRejected);
    REQUIRE(rejected.size() == 1);
    CHECK(rejected[0].body.at("reason") == "UnknownNode");
    CHECK(sink.to(1, MessageType::OpApplied)[0].body == sink.to(2, MessageType::OpApplied)[0].body);
  }
}

TEST_CASE("hub error replies") {
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(smallConfig());

  hub.handleLine(1, "not json", 0);
  hub.handleLine(1, R"({"type":"Join","room":"r","protocolVersion":"2","body":{}})", 0);
  hub.handle(1, submitMessage("r", ops::DeselectNode{}), 0);
  hub.handle(1, joinMessage("elsewhere", "a"), 0);
  hub.handle(1, joinMessage("r", "a"), 0);
  hub.handle(1, joinMessage("r", "a"), 0);
  hub.handle(1, {MessageType::OpSubmit, "r", {{"kind", "Teleport"}, {"payload", {}}}}, 0);
  hub.handle(1, {MessageType::JoinAck, "r", {}}, 0);

  std::vector<std::string> codes;
  for (const auto& m : sink.to(1, MessageType::Error)) codes.push_back(m.body.at("code"));
  CHECK(codes == std::vector<std::string>{"BadMessage", "ProtocolMismatch", "NotJoined",
                                          "UnknownRoom", "BadMessage", "BadMessage",
                                          "BadMessage"});
}

TEST_CASE("unknown rooms auto-create from the default config") {
  RecordingSink sink;
  HubOptions options;
  options.defaultConfig = smallConfig("template");
  Hub hub(options, sink);
  hub.handle(1, joinMessage("fresh", "a"), 0);
  REQUIRE(sink.to(1, MessageType::JoinAck).size() == 1);
  CHECK(hub.withRoom("fresh", [](const Room& r) { CHECK(r.graph().roomId() == "fresh"); }));
}

TEST_CASE("awareness is coalesced to 20 Hz with the newest values") {
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(smallConfig());
  hub.handle(1, joinMessage("r", "a"), 0);
  hub.handle(2, joinMessage("r", "b"), 0);
  hub.tick(0);
  sink.clear();

  NodeId anchor;
  hub.withRoom("r", [&](const Room& r) { anchor = r.graph().nodes().begin()->first; });

  // 200 updates over one second; the server ticks every millisecond.
  for (std::int64_t t = 1; t <= 1000; ++t) {
    if (t % 5 == 0) {
      AwarenessUpdate u;
      u.cursor = hintAt(anchor, t);
      u.timestamp = t;
      hub.handle(1, {MessageType::Awareness, "r", awarenessUpdateToJson(u)}, t);
    }
    hub.tick(t);
  }
  const auto received = sink.to(2, MessageType::Awareness);
  CHECK(received.size() <= 20);
  CHECK(received.size() >= 19);
  CHECK(sink.to(1, MessageType::Awareness).empty());
  std::int64_t last = -1;
  for (const auto& m : received) {
    REQUIRE(m.body.at("users").size() == 1);
    const auto ts = m.body.at("users").at(0).at("cursor").at("ts").get<std::int64_t>();
    CHECK(ts > last);
    last = ts;
  }
  // Each fan-out carries the newest hint stored at flush time.
  CHECK(last >= 955);
}

TEST_CASE("older awareness values are discarded") {
  Room room(smallConfig());
  const UserId a = room.join("a", Platform::Spatial3d, 0).session.id;
  const NodeId anchor = room.graph().nodes().begin()->first;
  AwarenessUpdate fresh;
  fresh.cursor = hintAt(anchor, 100);
  fresh.headPose = HeadPose{{0, 0, 50}, {}, 1.0, 1.2};
  fresh.timestamp = 100;
  room.publishAwareness(a, fresh, 100);
  AwarenessUpdate old;
  old.cursor = hintAt(anchor, 50);
  old.headPose = HeadPose{{9, 9, 9}, {}, 1.0, 1.2};
  old.timestamp = 50;
  room.publishAwareness(a, old, 101);
  const UserSession& s = room.sessions().at(a);
  CHECK(s.cursor->timestamp == 100);
  CHECK(s.headPose->position == Vec3{0, 0, 50});
  CHECK(s.headPoseTs == 100);
}

TEST_CASE("document and selection changes are sequenced") {
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(smallConfig());
  hub.handle(1, joinMessage("r", "a"), 0);
  hub.handle(2, joinMessage("r", "b"), 0);
  hub.handle(1, submitMessage("r", ops::AddNode{"N", {}, std::nullopt}), 0);
  const NodeId n(sink.to(1, MessageType::OpApplied)[0].body.at("graphDelta").at("upsertNodes").at(0).at("id"));
  hub.tick(0);
  sink.clear();

  AwarenessUpdate u;
  u.currentDocument = std::optional(DocumentId("d2"));
  u.selectedNode = std::optional(n);
  u.timestamp = 10;
  hub.handle(2, {MessageType::Awareness, "r", awarenessUpdateToJson(u)}, 10);
  const auto ops = sink.to(1, MessageType::OpApplied);
  REQUIRE(ops.size() == 2);
  CHECK(ops[0].body.at("op").at("kind") == "SetCurrentDocument");
  CHECK(ops[1].body.at("op").at("kind") == "SelectNode");
  CHECK(ops[1].body.at("op").at("actor") == "b");

  hub.tick(100);
  auto aw = sink.to(1, MessageType::Awareness);
  REQUIRE(aw.size() == 1);
  CHECK(aw[0].body.at("users").at(0).at("selectedNode") == n.value);
  CHECK(aw[0].body.at("users").at(0).at("currentDocument") == "d2");

  // Selected node deleted elsewhere: the next fan-out clears it.
  sink.clear();
  hub.handle(1, submitMessage("r", ops::DeleteNode{n}), 120);
  hub.tick(200);
  aw = sink.to(1, MessageType::Awareness);
  REQUIRE(aw.size() == 1);
  CHECK(aw[0].body.at("users").at(0).at("selectedNode").is_null());
  hub.withRoom("r", [&](const Room& r) {
    std::vector<SelectionView> views;
    for (const auto& [id, s] : r.sessions()) views.push_back({id, s.color, s.selectedNode});
    CHECK(selectionHighlight(r.graph(), views, UserId("a")).empty());
  });

  // Unknown documents are rejected back to the sender.
  sink.clear();
  u = {};
  u.currentDocument = std::optional(DocumentId("nope"));
  u.timestamp = 300;
  hub.handle(2, {MessageType::Awareness, "r", awarenessUpdateToJson(u)}, 300);
  const auto rejected = sink.to(2, MessageType::OpRejected);
  REQUIRE(rejected.size() == 1);
  CHECK(rejected[0].body.at("reason") == "UnknownDocument");
}

TEST_CASE("leaving is announced in the next fan-out") {
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(smallConfig());
  hub.handle(1, joinMessage("r", "a"), 0);
  hub.handle(2, joinMessage("r", "b"), 0);
  hub.tick(0);
  const auto joined = sink.to(1, MessageType::Awareness);
  REQUIRE(joined.size() == 1);
  CHECK(joined[0].body.at("users").at(0).at("user") == "b");
  sink.clear();
  hub.disconnect(2, 30);
  hub.tick(60);
  const auto left = sink.to(1, MessageType::Awareness);
  REQUIRE(left.size() == 1);
  CHECK(left[0].body.at("left") == nlohmann::json::array({"b"}));
}

TEST_CASE("late joiner converges with an early one") {
  RecordingSink sink;
  Hub hub({}, sink);
  hub.addRoom(smallConfig());
  hub.handle(1, joinMessage("r", "early", Platform::Spatial3d), 0);

  std::mt19937_64 rng(7);
  auto play = [&](int count, std::int64_t& t) {
    for (int i = 0; i < count; ++i) {
      GraphState current;
      hub.withRoom("r", [&](const Room& r) { current = r.graph(); });
      const Operation op = testing::randomOperation(rng, current, 0);
      hub.handle(1, submitMessage("r", op.payload), ++t);
    }
  };
  std::int64_t t = 0;
  play(60, t);
  hub.handle(2, joinMessage("r", "late"), t);
  play(60, t);

  ClientReplica early;
  ClientReplica late;
  for (const auto& [conn, m] : sink.sent) {
    ClientReplica& replica = conn == 1 ? early : late;
    if (m.type == MessageType::JoinAck) replica.loadSnapshot(m.body.at("snapshot"));
    if (m.type == MessageType::OpApplied) replica.onOpApplied(m.body);
  }
  std::string serverHash;
  LayoutResult serverLayout;
  hub.withRoom("r", [&](const Room& r) {
    serverHash = stateHash(r.graph());
    serverLayout = r.layout();
  });
  CHECK(early.stateHash() == serverHash);
  CHECK(late.stateHash() == serverHash);
  CHECK(early.layout() == serverLayout);
  CHECK(late.layout() == serverLayout);
  CHECK(early.pendingDeltas() == 0);
}

TEST_CASE("replica holds deltas back until the gap fills") {
  Room room(smallConfig());
  const UserId a = room.join("a", Platform::Flat2d, 0).session.id;
  ClientReplica replica;
  replica.loadSnapshot(room.snapshotJson());
  std::vector<nlohmann::json> bodies;
  for (int i = 0; i < 4; ++i) {
    bodies.push_back(opAppliedBody(room.submit(a, ops::AddNode{"n", {}, std::nullopt}, i)));
  }
  replica.onOpApplied(bodies[2]);
  replica.onOpApplied(bodies[1]);
  replica.onOpApplied(bodies[3]);
  CHECK(replica.version() == 0);
  CHECK(replica.pendingDeltas() == 3);
  replica.onOpApplied(bodies[0]);
  replica.onOpApplied(bodies[0]);
  CHECK(replica.version() == 4);
  CHECK(replica.appliedSeqs() == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(replica.stateHash() == stateHash(room.graph()));
  CHECK(replica.layout() == room.layout());
}

TEST_CASE("replica ignores stale awareness") {
  ClientReplica replica;
  UserSession s;
  s.id = UserId("b");
  s.name = "b";
  s.color = kPalette[1];
  s.colorSlot = 1;
  s.cursor = hintAt(NodeId("n"), 200);
  replica.onAwareness({{"users", {sessionToJson(s)}}, {"left", nlohmann::json::array()}});
  s.cursor = hintAt(NodeId("m"), 150);
  replica.onAwareness({{"users", {sessionToJson(s)}}, {"left", nlohmann::json::array()}});
  CHECK(replica.staleAwareness() == 1);
  CHECK(replica.peers().at(UserId("b")).cursor->entries[0].node.value == "n");
}

TEST_CASE("wire and body round trips") {
  const WireMessage m{MessageType::OpSubmit, "room-1", {{"kind", "DeselectNode"}, {"payload", nlohmann::json::object()}}};
  const std::string line = encodeMessage(m);
  CHECK(line.find('\n') == std::string::npos);
  const WireMessage back = decodeMessage(line);
  CHECK(back.type == m.type);
  CHECK(back.room == m.room);
  CHECK(back.body == m.body);
  CHECK(nlohmann::json::parse(line).at("protocolVersion") == "1");
  for (int t = 0; t <= static_cast<int>(MessageType::Error); ++t) {
    const auto type = static_cast<MessageType>(t);
    CHECK(parseMessageType(messageTypeName(type)) == type);
  }
  CHECK_THROWS_AS(decodeMessage(R"({"type":"Join","room":"r","body":{}})"), SyncError);
  CHECK_THROWS_AS(decodeMessage(R"({"type":"Join","room":"r","protocolVersion":"1","body":3})"),
                  SyncError);

  UserSession s;
  s.id = UserId("ana");
  s.name = "ana";
  s.color = kPalette[3];
  s.colorSlot = 3;
  s.platform = Platform::Spatial3d;
  s.currentDocument = DocumentId("d1");
  s.selectedNode = NodeId("r:n4");
  s.cursor = CursorHint{{{NodeId("r:n4"), 0.25}, {NodeId("r:n5"), 0.75}}, Platform::Spatial3d, 77};
  s.headPose = HeadPose{{1, 2, 3}, Quat::fromAxisAngle({0, 1, 0}, 0.5), 0.9, 1.4};
  s.headPoseTs = 80;
  const UserSession t = sessionFromJson(sessionToJson(s));
  CHECK(t.id == s.id);
  CHECK(t.color == s.color);
  CHECK(t.colorSlot == s.colorSlot);
  CHECK(t.platform == s.platform);
  CHECK(t.currentDocument == s.currentDocument);
  CHECK(t.selectedNode == s.selectedNode);
  CHECK(t.cursor->entries == s.cursor->entries);
  CHECK(t.headPose == s.headPose);
  CHECK(t.headPoseTs == 80);

  AwarenessUpdate u;
  u.selectedNode = std::optional<NodeId>();
  u.timestamp = 5;
  const AwarenessUpdate v = awarenessUpdateFromJson(awarenessUpdateToJson(u));
  REQUIRE(v.selectedNode);
  CHECK(!*v.selectedNode);
  CHECK(!v.currentDocument);
  CHECK(!v.cursor);
}

TEST_CASE("layout deltas reproduce the new layout") {
  Room room(smallConfig());
  const UserId a = room.join("a", Platform::Flat2d, 0).session.id;
  const NodeId x = addedNode(room.submit(a, ops::AddNode{"x", {}, std::nullopt}, 0));
  addedNode(room.submit(a, ops::AddNode{"y", {}, std::nullopt}, 0));
  LayoutResult mirror = room.layout();
  const auto del = room.submit(a, ops::DeleteNode{x}, 0);
  REQUIRE(del.applied());
  CHECK(del.layoutDelta.removed == std::vector<NodeId>{x});
  applyLayoutDelta(mirror, layoutDeltaFromJson(layoutDeltaToJson(del.layoutDelta)));
  CHECK(mirror == room.layout());
  CHECK(diffLayouts(room.layout(), room.layout()).upserts.empty());
}

TEST_CASE("room keeps layout in step with the graph") {
  Room room(smallConfig());
  const UserId a = room.join("a", Platform::Spatial3d, 0).session.id;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 150;) {
    const Operation op = testing::randomOperation(rng, room.graph(), 0);
    try {
      room.submit(a, op.payload, i);
    } catch (const SyncError& e) {
      REQUIRE(e.code() == SyncErrorCode::BadMessage);
      continue;
    }
    ++i;
    REQUIRE(room.layout().version == room.graph().version());
    REQUIRE(room.layout().positions3.size() == room.graph().nodes().size());
    for (const auto& [id, n] : room.graph().nodes()) {
      REQUIRE(room.layout().positions2.contains(id));
    }
    REQUIRE(checkInvariants(room.graph()).empty());
  }
  CHECK(room.history().size() == 150);
  for (std::size_t i = 0; i < room.history().size(); ++i) {
    CHECK(room.history()[i].op.seq == i + 1);
  }
}
