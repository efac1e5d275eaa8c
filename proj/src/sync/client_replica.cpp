#include "visrooms/sync/client_replica.hpp"

namespace visrooms {

using nlohmann::json;

void ClientReplica::loadSnapshot(const json& snapshot) {
  graph_ = GraphState::fromCanonicalJson(snapshot.at("graph"));
  layout_ = layoutFromJson(snapshot.at("layout"));
  peers_.clear();
  for (const json& s : snapshot.at("sessions")) {
    UserSession session = sessionFromJson(s);
    peers_[session.id] = std::move(session);
  }
  loaded_ = true;
  snapshotVersion_ = graph_.version();
  std::erase_if(pending_, [&](const auto& p) { return p.first <= graph_.version(); });
  applyReady();
}

void ClientReplica::onOpApplied(const json& body) {
  const auto version = body.at("version").get<std::uint64_t>();
  if (loaded_ && version <= graph_.version()) return;
  pending_.emplace(version, body);
  if (loaded_) applyReady();
}

void ClientReplica::applyReady() {
  for (auto it = pending_.find(graph_.version() + 1); it != pending_.end();
       it = pending_.find(graph_.version() + 1)) {
    const json& body = it->second;
    graph_.applyDelta(deltaFromJson(body.at("graphDelta")));
    applyLayoutDelta(layout_, layoutDeltaFromJson(body.at("layoutDelta")));
    appliedSeqs_.push_back(body.at("op").at("seq").get<std::uint64_t>());
    pending_.erase(it);
  }
}

void ClientReplica::onAwareness(const json& body) {
  for (const json& s : body.at("users")) {
    UserSession incoming = sessionFromJson(s);
    auto& [cursorTs, poseTs] = seen_.try_emplace(incoming.id, -1, -1).first->second;
    UserSession& peer = peers_[incoming.id];
    const std::optional<CursorHint> oldCursor = peer.cursor;
    const std::optional<HeadPose> oldPose = peer.headPose;
    const std::int64_t oldPoseTs = peer.headPoseTs;
    peer = incoming;
    if (incoming.cursor) {
      if (incoming.cursor->timestamp < cursorTs) {
        ++stale_;
        peer.cursor = oldCursor;
      } else {
        cursorTs = incoming.cursor->timestamp;
      }
    }
    if (incoming.headPose) {
      if (incoming.headPoseTs < poseTs) {
        ++stale_;
        peer.headPose = oldPose;
        peer.headPoseTs = oldPoseTs;
      } else {
        poseTs = incoming.headPoseTs;
      }
    }
  }
  for (const json& u : body.at("left")) {
    peers_.erase(UserId(u.get<std::string>()));
  }
}

}  // namespace visrooms
