#include "visrooms/sync/room.hpp"

#include <algorithm>
#include <cmath>

namespace visrooms {

using nlohmann::json;

namespace {

json vec3Json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

bool finite(Vec3 v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }
Vec3 vec3From(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

template <class T>
json optionalId(const std::optional<T>& id) {
  return id ? json(id->value) : json(nullptr);
}

template <class T>
std::optional<T> optionalIdFrom(const json& j) {
  if (j.is_null()) return std::nullopt;
  return T(j.get<std::string>());
}

}  // namespace

json sessionToJson(const UserSession& s) {
  json headPose = nullptr;
  if (s.headPose) {
    headPose = headPoseToJson(*s.headPose);
    headPose["ts"] = s.headPoseTs;
  }
  return {{"user", s.id},
          {"name", s.name},
          {"color", {s.color.r, s.color.g, s.color.b}},
          {"platform", platformName(s.platform)},
          {"currentDocument", optionalId(s.currentDocument)},
          {"selectedNode", optionalId(s.selectedNode)},
          {"cursor", s.cursor ? cursorHintToJson(s.id, *s.cursor) : json(nullptr)},
          {"headPose", headPose}};
}

UserSession sessionFromJson(const json& j) {
  UserSession s;
  s.id = UserId(j.at("user").get<std::string>());
  s.name = j.at("name").get<std::string>();
  const json& c = j.at("color");
  s.color = {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(),
             c.at(2).get<std::uint8_t>()};
  for (std::size_t i = 0; i < kPalette.size(); ++i) {
    if (kPalette[i] == s.color) s.colorSlot = i;
  }
  s.platform = parsePlatform(j.at("platform").get<std::string>());
  s.currentDocument = optionalIdFrom<DocumentId>(j.at("currentDocument"));
  s.selectedNode = optionalIdFrom<NodeId>(j.at("selectedNode"));
  if (!j.at("cursor").is_null()) s.cursor = cursorHintFromJson(j.at("cursor"));
  if (!j.at("headPose").is_null()) {
    s.headPose = headPoseFromJson(j.at("headPose"));
    s.headPoseTs = j.at("headPose").at("ts").get<std::int64_t>();
  }
  return s;
}

json layoutDeltaToJson(const LayoutDelta& d) {
  json upserts = json::object();
  for (const auto& [id, e] : d.upserts) {
    upserts[id.value] = {{"p3", vec3Json(e.position3)},
                         {"p2", {e.position2.x, e.position2.y}},
                         {"pinned", e.pinned}};
  }
  return {{"upserts", upserts}, {"removed", d.removed}, {"version", d.version}};
}

LayoutDelta layoutDeltaFromJson(const json& j) {
  LayoutDelta d;
  for (const auto& [id, e] : j.at("upserts").items()) {
    const json& p2 = e.at("p2");
    d.upserts[NodeId(id)] = {vec3From(e.at("p3")),
                             {p2.at(0).get<double>(), p2.at(1).get<double>()},
                             e.at("pinned").get<bool>()};
  }
  for (const json& id : j.at("removed")) d.removed.emplace_back(id.get<std::string>());
  d.version = j.at("version").get<std::uint64_t>();
  return d;
}

LayoutDelta diffLayouts(const LayoutResult& before, const LayoutResult& after) {
  LayoutDelta d;
  d.version = after.version;
  for (const auto& [id, p3] : after.positions3) {
    const LayoutEntry now{p3, after.positions2.at(id), after.pinned.contains(id)};
    auto it = before.positions3.find(id);
    if (it != before.positions3.end()) {
      const LayoutEntry was{it->second, before.positions2.at(id), before.pinned.contains(id)};
      if (was == now) continue;
    }
    d.upserts.emplace(id, now);
  }
  for (const auto& [id, p3] : before.positions3) {
    if (!after.positions3.contains(id)) d.removed.push_back(id);
  }
  return d;
}

void applyLayoutDelta(LayoutResult& layout, const LayoutDelta& d) {
  for (const NodeId& id : d.removed) {
    layout.positions3.erase(id);
    layout.positions2.erase(id);
    layout.pinned.erase(id);
  }
  for (const auto& [id, e] : d.upserts) {
    layout.positions3[id] = e.position3;
    layout.positions2[id] = e.position2;
    if (e.pinned) {
      layout.pinned.insert(id);
    } else {
      layout.pinned.erase(id);
    }
  }
  layout.version = d.version;
}

json opAppliedBody(const SubmitOutcome& o) {
  return {{"op", operationToJson(o.entry.op)},
          {"graphDelta", deltaToJson(o.graphDelta)},
          {"layoutDelta", layoutDeltaToJson(o.layoutDelta)},
          {"version", o.graphDelta.version}};
}

json opRejectedBody(const SubmitOutcome& o) {
  return {{"op", operationToJson(o.entry.op)},
          {"reason", rejectReasonName(*o.entry.rejected)}};
}

json awarenessUpdateToJson(const AwarenessUpdate& u) {
  json j = {{"ts", u.timestamp}};
  if (u.cursor) j["cursor"] = cursorHintToJson(UserId(), *u.cursor);
  if (u.headPose) j["headPose"] = headPoseToJson(*u.headPose);
  if (u.currentDocument) j["currentDocument"] = optionalId(*u.currentDocument);
  if (u.selectedNode) j["selectedNode"] = optionalId(*u.selectedNode);
  return j;
}

AwarenessUpdate awarenessUpdateFromJson(const json& j) {
  AwarenessUpdate u;
  u.timestamp = j.at("ts").get<std::int64_t>();
  if (auto it = j.find("cursor"); it != j.end() && !it->is_null()) {
    u.cursor = cursorHintFromJson(*it);
  }
  if (auto it = j.find("headPose"); it != j.end() && !it->is_null()) {
    u.headPose = headPoseFromJson(*it);
  }
  if (auto it = j.find("currentDocument"); it != j.end()) {
    u.currentDocument = optionalIdFrom<DocumentId>(*it);
  }
  if (auto it = j.find("selectedNode"); it != j.end()) {
    u.selectedNode = optionalIdFrom<NodeId>(*it);
  }
  return u;
}

std::optional<json> awarenessBodyFor(const AwarenessBatch& batch, const UserId& receiver) {
  json users = json::array();
  for (const UserSession& s : batch.changed) {
    if (s.id != receiver) users.push_back(sessionToJson(s));
  }
  json left = json::array();
  for (const UserId& u : batch.left) {
    if (u != receiver) left.push_back(u);
  }
  if (users.empty() && left.empty()) return std::nullopt;
  return json{{"users", users}, {"left", left}, {"ts", batch.timestamp}};
}

Room::Room(RoomConfig config)
    : config_(std::move(config)),
      panels_(panelPosesFor(config_)),
      graph_(initialGraph(config_)),
      layout_(computeLayout(graph_, config_.layoutParams)) {}

Room::Room(RoomConfig config, GraphState state, std::vector<LoggedOp> history)
    : config_(std::move(config)),
      panels_(panelPosesFor(config_)),
      graph_(std::move(state)),
      layout_(computeLayout(graph_, config_.layoutParams)),
      history_(std::move(history)) {}

JoinResult Room::join(const std::string& name, Platform platform, std::int64_t) {
  if (name.empty()) throw SyncError(SyncErrorCode::BadMessage, "name must be non-empty");
  std::array<bool, kPalette.size()> used{};
  std::set<std::string> names;
  for (const auto& [id, s] : sessions_) {
    used[s.colorSlot] = true;
    names.insert(s.name);
  }
  const auto slot = std::find(used.begin(), used.end(), false);
  if (slot == used.end()) {
    throw SyncError(SyncErrorCode::RoomFull,
                    "room " + id() + " already has " + std::to_string(kPalette.size()) +
                        " users");
  }

  JoinResult r;
  std::string unique = name;
  for (int k = 2; names.contains(unique); ++k) unique = name + "-" + std::to_string(k);
  if (unique != name) {
    r.warning = "name '" + name + "' is taken; joined as '" + unique + "'";
  }

  UserSession s;
  s.id = UserId(unique);
  s.name = unique;
  s.colorSlot = static_cast<std::size_t>(slot - used.begin());
  s.color = kPalette[s.colorSlot];
  s.platform = platform;
  sessions_[s.id] = s;
  dirty_.insert(s.id);
  std::erase(left_, s.id);
  r.session = std::move(s);
  return r;
}

void Room::leave(const UserId& user, std::int64_t) {
  if (sessions_.erase(user) == 0) return;
  dirty_.erase(user);
  left_.push_back(user);
}

SubmitOutcome Room::submit(const UserId& actor, OpPayload payload, std::int64_t now) {
  const auto session = sessions_.find(actor);
  if (session == sessions_.end()) {
    throw SyncError(SyncErrorCode::NotJoined, actor.value + " has not joined " + id());
  }
  // The log and the wire are JSON, which has no NaN or infinity.
  const auto* add0 = std::get_if<ops::AddNode>(&payload);
  const auto* move0 = std::get_if<ops::MoveNode>(&payload);
  if ((add0 && !finite(add0->position)) || (move0 && !finite(move0->position))) {
    throw SyncError(SyncErrorCode::BadMessage, "position must be finite");
  }
  if (auto* add = std::get_if<ops::AddNode>(&payload)) {
    payload = createNodeWithDefaultLink(session->second.platform,
                                        session->second.currentDocument,
                                        std::move(add->label), add->position);
  }

  SubmitOutcome out;
  out.entry.op.seq = nextSeq();
  out.entry.op.actor = actor;
  out.entry.op.payload = std::move(payload);
  out.entry.op.timestamp = now;

  auto result = graph_.applyInPlace(out.entry.op);
  if (!result.ok()) out.entry.rejected = result.error();
  if (log_) log_->append(out.entry);
  history_.push_back(out.entry);
  if (!result.ok()) {
    out.layoutDelta.version = layout_.version;
    return out;
  }

  out.graphDelta = std::move(*result);
  const OpKind kind = payloadKind(out.entry.op.payload);
  if (isStructural(kind)) {
    LayoutResult next = computeLayout(graph_, config_.layoutParams, &layout_.positions3);
    out.layoutDelta = diffLayouts(layout_, next);
    layout_ = std::move(next);
  } else {
    layout_.version = graph_.version();
    out.layoutDelta.version = layout_.version;
    if (const auto* move = std::get_if<ops::MoveNode>(&out.entry.op.payload)) {
      const LayoutEntry e{move->position, {move->position.x, move->position.y},
                          layout_.pinned.contains(move->node)};
      layout_.positions3[move->node] = e.position3;
      layout_.positions2[move->node] = e.position2;
      out.layoutDelta.upserts.emplace(move->node, e);
    }
  }
  afterApplied(actor, out.entry.op.payload);
  return out;
}

void Room::afterApplied(const UserId& actor, const OpPayload& payload) {
  UserSession& s = sessions_.at(actor);
  if (const auto* sel = std::get_if<ops::SelectNode>(&payload)) {
    s.selectedNode = sel->node;
    dirty_.insert(actor);
  } else if (std::holds_alternative<ops::DeselectNode>(payload)) {
    s.selectedNode.reset();
    dirty_.insert(actor);
  } else if (const auto* doc = std::get_if<ops::SetCurrentDocument>(&payload)) {
    s.currentDocument = doc->document;
    dirty_.insert(actor);
  } else if (std::holds_alternative<ops::DeleteNode>(payload) ||
             std::holds_alternative<ops::MergeNodes>(payload)) {
    for (auto& [id, other] : sessions_) {
      if (other.selectedNode && graph_.findNode(*other.selectedNode) == nullptr) {
        other.selectedNode.reset();
        dirty_.insert(id);
      }
    }
  }
}

std::vector<SubmitOutcome> Room::publishAwareness(const UserId& user,
                                                  const AwarenessUpdate& update,
                                                  std::int64_t now) {
  const auto it = sessions_.find(user);
  if (it == sessions_.end()) {
    throw SyncError(SyncErrorCode::NotJoined, user.value + " has not joined " + id());
  }
  UserSession& s = it->second;
  if (update.cursor && (!s.cursor || update.cursor->timestamp >= s.cursor->timestamp)) {
    s.cursor = update.cursor;
    dirty_.insert(user);
  }
  if (update.headPose && update.timestamp >= s.headPoseTs) {
    s.headPose = update.headPose;
    s.headPoseTs = update.timestamp;
    dirty_.insert(user);
  }

  std::vector<SubmitOutcome> sequenced;
  if (update.currentDocument && *update.currentDocument != s.currentDocument) {
    sequenced.push_back(submit(user, ops::SetCurrentDocument{*update.currentDocument}, now));
  }
  if (update.selectedNode && *update.selectedNode != sessions_.at(user).selectedNode) {
    if (*update.selectedNode) {
      sequenced.push_back(submit(user, ops::SelectNode{**update.selectedNode}, now));
    } else {
      sequenced.push_back(submit(user, ops::DeselectNode{}, now));
    }
  }
  return sequenced;
}

std::optional<AwarenessBatch> Room::flushAwareness(std::int64_t now) {
  if (dirty_.empty() && left_.empty()) return std::nullopt;
  if (lastFlush_ && now - *lastFlush_ < kAwarenessIntervalMs) return std::nullopt;
  AwarenessBatch batch;
  batch.timestamp = now;
  for (const UserId& u : dirty_) {
    if (auto it = sessions_.find(u); it != sessions_.end()) batch.changed.push_back(it->second);
  }
  batch.left = std::move(left_);
  left_.clear();
  dirty_.clear();
  lastFlush_ = now;
  return batch;
}

json Room::snapshotJson() const {
  json docs = json::array();
  for (const Document& d : config_.documents) docs.push_back(documentToJson(d));
  json panels = json::array();
  for (const PanelPose& p : panels_) panels.push_back(panelPoseToJson(p));
  json sessions = json::array();
  for (const auto& [id, s] : sessions_) sessions.push_back(sessionToJson(s));
  return {{"graph", graph_.canonicalJson()},
          {"layout", layoutToJson(layout_)},
          {"documents", docs},
          {"panelPoses", panels},
          {"sessions", sessions},
          {"nextSeq", nextSeq()}};
}

}  // namespace visrooms
