#include "visrooms/graph/graph_state.hpp"

#include <algorithm>
#include <cmath>

namespace visrooms {

namespace {

bool finitePosition(Vec3 p) { return p.finite(); }

}  // namespace

GraphState GraphState::create(std::string roomId,
                              std::span<const DocumentAnchorSpec> anchors) {
  GraphState g;
  g.roomId_ = std::move(roomId);
  for (const auto& a : anchors) {
    NodeRecord n;
    n.id = NodeId(g.roomId_ + ":doc:" + a.document.value);
    n.label = a.label;
    n.position3 = a.position;
    n.creator = UserId("system");
    n.isDocAnchor = true;
    g.anchors_.emplace(a.document, n.id);
    g.nodes_.emplace(n.id, std::move(n));
  }
  return g;
}

GraphState::Pair GraphState::orderedPair(const NodeId& a, const NodeId& b) {
  return a < b ? Pair{a, b} : Pair{b, a};
}

const NodeRecord* GraphState::findNode(const NodeId& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const LinkRecord* GraphState::findLink(const LinkId& id) const {
  auto it = links_.find(id);
  return it == links_.end() ? nullptr : &it->second;
}

std::optional<LinkId> GraphState::linkBetween(const NodeId& a,
                                              const NodeId& b) const {
  auto it = pairIndex_.find(orderedPair(a, b));
  if (it == pairIndex_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> GraphState::anchorFor(const DocumentId& doc) const {
  auto it = anchors_.find(doc);
  if (it == anchors_.end()) return std::nullopt;
  return it->second;
}

std::vector<LinkId> GraphState::incidentLinks(const NodeId& n) const {
  auto it = incident_.find(n);
  if (it == incident_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

NodeId GraphState::allocateNodeId() {
  return NodeId(roomId_ + ":n" + std::to_string(nextOrdinal_++));
}

LinkId GraphState::allocateLinkId(std::uint64_t& ordinal) {
  ordinal = nextOrdinal_++;
  return LinkId(roomId_ + ":l" + std::to_string(ordinal));
}

void GraphState::insertLink(LinkRecord link) {
  pairIndex_[link.endpoints] = link.id;
  incident_[link.endpoints.first].insert(link.id);
  incident_[link.endpoints.second].insert(link.id);
  const LinkId id = link.id;
  links_.insert_or_assign(id, std::move(link));
}

void GraphState::eraseLink(const LinkId& id) {
  auto it = links_.find(id);
  if (it == links_.end()) return;
  const auto& ep = it->second.endpoints;
  pairIndex_.erase(ep);
  for (const NodeId* n : {&ep.first, &ep.second}) {
    auto inc = incident_.find(*n);
    if (inc != incident_.end()) {
      inc->second.erase(id);
      if (inc->second.empty()) incident_.erase(inc);
    }
  }
  links_.erase(it);
}

void GraphState::rebuildIndexes() {
  pairIndex_.clear();
  incident_.clear();
  for (const auto& [id, link] : links_) {
    pairIndex_[link.endpoints] = id;
    incident_[link.endpoints.first].insert(id);
    incident_[link.endpoints.second].insert(id);
  }
}

std::optional<RejectReason> GraphState::validate(const Operation& op) const {
  const auto requireNode = [&](const NodeId& id) -> std::optional<RejectReason> {
    if (!nodes_.contains(id)) return RejectReason::UnknownNode;
    return std::nullopt;
  };

  return std::visit(
      [&](const auto& p) -> std::optional<RejectReason> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ops::AddNode>) {
          if (!finitePosition(p.position)) return RejectReason::InvalidPayload;
          if (p.defaultLinkDoc && !hasDocument(*p.defaultLinkDoc)) {
            return RejectReason::UnknownDocument;
          }
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::MoveNode>) {
          if (auto r = requireNode(p.node)) return r;
          if (!finitePosition(p.position)) return RejectReason::InvalidPayload;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::RenameNode> ||
                             std::is_same_v<T, ops::SelectNode>) {
          return requireNode(p.node);
        } else if constexpr (std::is_same_v<T, ops::MergeNodes>) {
          if (p.src == p.dst) return RejectReason::InvalidPayload;
          if (auto r = requireNode(p.src)) return r;
          if (auto r = requireNode(p.dst)) return r;
          if (nodes_.at(p.src).isDocAnchor || nodes_.at(p.dst).isDocAnchor) {
            return RejectReason::AnchorDeletion;
          }
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::DeleteNode>) {
          if (auto r = requireNode(p.node)) return r;
          if (nodes_.at(p.node).isDocAnchor) return RejectReason::AnchorDeletion;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::AddLink>) {
          if (auto r = requireNode(p.a)) return r;
          if (auto r = requireNode(p.b)) return r;
          if (p.a == p.b) return RejectReason::SelfLink;
          if (linkBetween(p.a, p.b)) return RejectReason::DuplicateLink;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::RelabelLink> ||
                             std::is_same_v<T, ops::DeleteLink>) {
          if (!links_.contains(p.link)) return RejectReason::UnknownLink;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, ops::DeselectNode>) {
          return std::nullopt;
        } else {
          if (p.document && !hasDocument(*p.document)) {
            return RejectReason::UnknownDocument;
          }
          return std::nullopt;
        }
      },
      op.payload);
}

Result<GraphDelta> GraphState::applyInPlace(const Operation& op) {
  if (auto reason = validate(op)) return *reason;

  std::set<NodeId> touchedNodes;
  std::set<LinkId> touchedLinks;

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ops::AddNode>) {
          NodeRecord n;
          n.id = allocateNodeId();
          n.label = p.label;
          n.position3 = p.position;
          n.creator = op.actor;
          const NodeId id = n.id;
          nodes_.emplace(id, std::move(n));
          touchedNodes.insert(id);
          if (p.defaultLinkDoc) {
            const NodeId anchor = anchors_.at(*p.defaultLinkDoc);
            LinkRecord l;
            l.id = allocateLinkId(l.ordinal);
            l.endpoints = orderedPair(id, anchor);
            l.creator = op.actor;
            l.isDefaultDocLink = true;
            touchedLinks.insert(l.id);
            insertLink(std::move(l));
          }
        } else if constexpr (std::is_same_v<T, ops::MoveNode>) {
          nodes_.at(p.node).position3 = p.position;
          touchedNodes.insert(p.node);
        } else if constexpr (std::is_same_v<T, ops::RenameNode>) {
          nodes_.at(p.node).label = p.label;
          touchedNodes.insert(p.node);
        } else if constexpr (std::is_same_v<T, ops::MergeNodes>) {
          NodeRecord& dst = nodes_.at(p.dst);
          const NodeRecord& src = nodes_.at(p.src);
          dst.position3 = (src.position3 + dst.position3) * 0.5;
          touchedNodes.insert(p.dst);

          std::vector<LinkRecord> rehome;
          for (const LinkId& id : incidentLinks(p.src)) {
            rehome.push_back(links_.at(id));
          }
          std::sort(rehome.begin(), rehome.end(),
                    [](const LinkRecord& a, const LinkRecord& b) {
                      return a.ordinal < b.ordinal;
                    });
          for (LinkRecord& link : rehome) {
            const NodeId other = link.other(p.src);
            eraseLink(link.id);
            touchedLinks.insert(link.id);
            if (other == p.dst) continue;  // would become a self-loop
            if (auto existing = linkBetween(p.dst, other)) {
              if (links_.at(*existing).ordinal < link.ordinal) continue;
              eraseLink(*existing);
              touchedLinks.insert(*existing);
            }
            link.endpoints = orderedPair(p.dst, other);
            insertLink(std::move(link));
          }
          nodes_.erase(p.src);
          touchedNodes.insert(p.src);
        } else if constexpr (std::is_same_v<T, ops::DeleteNode>) {
          for (const LinkId& id : incidentLinks(p.node)) {
            eraseLink(id);
            touchedLinks.insert(id);
          }
          nodes_.erase(p.node);
          touchedNodes.insert(p.node);
        } else if constexpr (std::is_same_v<T, ops::AddLink>) {
          LinkRecord l;
          l.id = allocateLinkId(l.ordinal);
          l.endpoints = orderedPair(p.a, p.b);
          l.label = p.label;
          l.creator = op.actor;
          touchedLinks.insert(l.id);
          insertLink(std::move(l));
        } else if constexpr (std::is_same_v<T, ops::RelabelLink>) {
          links_.at(p.link).label = p.label;
          touchedLinks.insert(p.link);
        } else if constexpr (std::is_same_v<T, ops::DeleteLink>) {
          eraseLink(p.link);
          touchedLinks.insert(p.link);
        }
        // Selection and document changes carry no graph mutation beyond the
        // version bump; session state lives in the room.
      },
      op.payload);

  ++version_;

  GraphDelta delta;
  delta.version = version_;
  delta.nextOrdinal = nextOrdinal_;
  for (const NodeId& id : touchedNodes) {
    if (auto it = nodes_.find(id); it != nodes_.end()) {
      delta.upsertNodes.push_back(it->second);
    } else {
      delta.removedNodes.push_back(id);
    }
  }
  for (const LinkId& id : touchedLinks) {
    if (auto it = links_.find(id); it != links_.end()) {
      delta.upsertLinks.push_back(it->second);
    } else {
      delta.removedLinks.push_back(id);
    }
  }
  return delta;
}

void GraphState::applyDelta(const GraphDelta& delta) {
  for (const LinkId& id : delta.removedLinks) eraseLink(id);
  for (const NodeId& id : delta.removedNodes) {
    for (const LinkId& l : incidentLinks(id)) eraseLink(l);
    nodes_.erase(id);
  }
  for (const NodeRecord& n : delta.upsertNodes) nodes_.insert_or_assign(n.id, n);
  for (const LinkRecord& l : delta.upsertLinks) {
    eraseLink(l.id);
    insertLink(l);
  }
  version_ = delta.version;
  nextOrdinal_ = delta.nextOrdinal;
}

Result<GraphState> apply(const GraphState& state, const Operation& op) {
  GraphState next = state;
  auto r = next.applyInPlace(op);
  if (!r) return r.error();
  return next;
}

std::vector<std::string> checkInvariants(const GraphState& g) {
  std::vector<std::string> bad;
  std::size_t anchorNodes = 0;
  for (const auto& [id, n] : g.nodes()) {
    if (n.id != id) bad.push_back("node key mismatch " + id.value);
    if (!n.position3.finite()) bad.push_back("non-finite position " + id.value);
    if (n.isDocAnchor) ++anchorNodes;
  }
  if (anchorNodes != g.documentAnchors().size()) {
    bad.push_back("anchor node count differs from document count");
  }
  for (const auto& [doc, nodeId] : g.documentAnchors()) {
    const NodeRecord* n = g.findNode(nodeId);
    if (n == nullptr || !n->isDocAnchor) {
      bad.push_back("missing anchor for document " + doc.value);
    }
  }
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& [id, l] : g.links()) {
    if (l.id != id) bad.push_back("link key mismatch " + id.value);
    const auto& [a, b] = l.endpoints;
    if (!g.findNode(a) || !g.findNode(b)) {
      bad.push_back("dangling link " + id.value);
    }
    if (a == b) bad.push_back("self-loop " + id.value);
    if (!(a < b)) bad.push_back("unordered endpoints " + id.value);
    if (!pairs.insert(l.endpoints).second) {
      bad.push_back("duplicate pair at " + id.value);
    }
    if (g.linkBetween(a, b) != id) bad.push_back("pair index stale " + id.value);
  }
  return bad;
}

}  // namespace visrooms
