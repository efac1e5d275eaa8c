#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "visrooms/geometry.hpp"
#include "visrooms/graph/ids.hpp"
#include "visrooms/graph/operation.hpp"
#include "visrooms/graph/result.hpp"

namespace visrooms {

struct NodeRecord {
  NodeId id;
  std::string label;
  Vec3 position3;
  UserId creator;
  bool isDocAnchor = false;
  /// Authoritative state keeps this false; streamed views fill it from the
  /// 2D layout's pinned set.
  bool pinnedIn2d = false;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

/// Undirected; endpoints are stored with first < second.
struct LinkRecord {
  LinkId id;
  std::pair<NodeId, NodeId> endpoints;
  std::string label;
  UserId creator;
  bool isDefaultDocLink = false;
  /// Creation order within the room, used to keep the older link on merge.
  std::uint64_t ordinal = 0;

  bool touches(const NodeId& n) const {
    return endpoints.first == n || endpoints.second == n;
  }
  const NodeId& other(const NodeId& n) const {
    return endpoints.first == n ? endpoints.second : endpoints.first;
  }

  friend bool operator==(const LinkRecord&, const LinkRecord&) = default;
};

struct DocumentAnchorSpec {
  DocumentId document;
  std::string label;
  Vec3 position;
};

/// Entities touched by one applied operation, enough for a replica to follow
/// without re-running the operation.
struct GraphDelta {
  std::vector<NodeRecord> upsertNodes;
  std::vector<NodeId> removedNodes;
  std::vector<LinkRecord> upsertLinks;
  std::vector<LinkId> removedLinks;
  std::uint64_t version = 0;
  std::uint64_t nextOrdinal = 0;

  bool empty() const {
    return upsertNodes.empty() && removedNodes.empty() && upsertLinks.empty() &&
           removedLinks.empty();
  }
};

nlohmann::json deltaToJson(const GraphDelta& d);
GraphDelta deltaFromJson(const nlohmann::json& j);

nlohmann::json nodeToJson(const NodeRecord& n);
NodeRecord nodeFromJson(const nlohmann::json& j);
nlohmann::json linkToJson(const LinkRecord& l);
LinkRecord linkFromJson(const nlohmann::json& j);

/// Authoritative node-link diagram of one room.
///
/// Every applied operation (including selection and document changes, which
/// are validated against the graph) advances `version` by exactly one.
/// Rejected operations leave the state untouched.
class GraphState {
 public:
  GraphState() = default;

  /// Fresh room graph holding one anchor node per document, at version 0.
  static GraphState create(std::string roomId,
                           std::span<const DocumentAnchorSpec> anchors);

  const std::string& roomId() const { return roomId_; }
  std::uint64_t version() const { return version_; }
  std::uint64_t nextOrdinal() const { return nextOrdinal_; }
  const std::map<NodeId, NodeRecord>& nodes() const { return nodes_; }
  const std::map<LinkId, LinkRecord>& links() const { return links_; }
  const std::map<DocumentId, NodeId>& documentAnchors() const {
    return anchors_;
  }

  const NodeRecord* findNode(const NodeId& id) const;
  const LinkRecord* findLink(const LinkId& id) const;
  std::optional<LinkId> linkBetween(const NodeId& a, const NodeId& b) const;
  std::optional<NodeId> anchorFor(const DocumentId& doc) const;
  bool hasDocument(const DocumentId& doc) const {
    return anchors_.contains(doc);
  }
  std::vector<LinkId> incidentLinks(const NodeId& n) const;

  /// Checks an operation against the current state without applying it.
  std::optional<RejectReason> validate(const Operation& op) const;

  /// Applies in place with the strong guarantee: on rejection nothing changes.
  Result<GraphDelta> applyInPlace(const Operation& op);

  /// Follows a delta produced by applyInPlace on an identical state.
  void applyDelta(const GraphDelta& delta);

  /// Canonical JSON: every map emitted sorted by key.
  nlohmann::json canonicalJson() const;
  std::string canonicalString() const;
  static GraphState fromCanonicalJson(const nlohmann::json& j);

  friend bool operator==(const GraphState& a, const GraphState& b) {
    return a.roomId_ == b.roomId_ && a.version_ == b.version_ &&
           a.nextOrdinal_ == b.nextOrdinal_ && a.nodes_ == b.nodes_ &&
           a.links_ == b.links_ && a.anchors_ == b.anchors_;
  }

 private:
  using Pair = std::pair<NodeId, NodeId>;
  static Pair orderedPair(const NodeId& a, const NodeId& b);

  NodeId allocateNodeId();
  LinkId allocateLinkId(std::uint64_t& ordinal);
  void insertLink(LinkRecord link);
  void eraseLink(const LinkId& id);
  void rebuildIndexes();

  std::string roomId_;
  std::uint64_t version_ = 0;
  std::uint64_t nextOrdinal_ = 1;
  std::map<NodeId, NodeRecord> nodes_;
  std::map<LinkId, LinkRecord> links_;
  std::map<DocumentId, NodeId> anchors_;

  // Derived indexes, rebuilt on load.
  std::map<Pair, LinkId> pairIndex_;
  std::map<NodeId, std::set<LinkId>> incident_;
};

/// Pure form: returns the successor state or the rejection reason.
Result<GraphState> apply(const GraphState& state, const Operation& op);

/// 64-bit FNV-1a over the canonical serialization, as 16 hex digits.
std::string stateHash(const GraphState& state);
std::string fnv1a64Hex(std::string_view bytes);

/// Violations of the node/link invariants; empty when the state is sound.
std::vector<std::string> checkInvariants(const GraphState& state);

}  // namespace visrooms
