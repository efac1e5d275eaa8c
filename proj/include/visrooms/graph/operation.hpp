#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "visrooms/geometry.hpp"
#include "visrooms/graph/ids.hpp"

namespace visrooms {

enum class OpKind {
  AddNode,
  MoveNode,
  RenameNode,
  MergeNodes,
  DeleteNode,
  AddLink,
  RelabelLink,
  DeleteLink,
  SelectNode,
  DeselectNode,
  SetCurrentDocument,
};

inline constexpr std::size_t kOpKindCount = 11;

inline constexpr std::array<OpKind, kOpKindCount> kAllOpKinds = {
    OpKind::AddNode,     OpKind::MoveNode,   OpKind::RenameNode,
    OpKind::MergeNodes,  OpKind::DeleteNode, OpKind::AddLink,
    OpKind::RelabelLink, OpKind::DeleteLink, OpKind::SelectNode,
    OpKind::DeselectNode, OpKind::SetCurrentDocument,
};

std::string_view opKindName(OpKind kind);
std::optional<OpKind> parseOpKind(std::string_view name);

/// Structural kinds change the node/link topology and trigger relayout.
bool isStructural(OpKind kind);

namespace ops {

struct AddNode {
  std::string label;
  Vec3 position;
  /// Filled by the server for spatial users with a document open.
  std::optional<DocumentId> defaultLinkDoc;
};
struct MoveNode {
  NodeId node;
  Vec3 position;
};
struct RenameNode {
  NodeId node;
  std::string label;
};
struct MergeNodes {
  NodeId src;
  NodeId dst;
};
struct DeleteNode {
  NodeId node;
};
struct AddLink {
  NodeId a;
  NodeId b;
  std::string label;
};
struct RelabelLink {
  LinkId link;
  std::string label;
};
struct DeleteLink {
  LinkId link;
};
struct SelectNode {
  NodeId node;
};
struct DeselectNode {};
struct SetCurrentDocument {
  /// Empty closes the current document.
  std::optional<DocumentId> document;
};

}  // namespace ops

// Alternative order matches OpKind.
using OpPayload =
    std::variant<ops::AddNode, ops::MoveNode, ops::RenameNode, ops::MergeNodes,
                 ops::DeleteNode, ops::AddLink, ops::RelabelLink,
                 ops::DeleteLink, ops::SelectNode, ops::DeselectNode,
                 ops::SetCurrentDocument>;

/// AddNode request for a user; spatial users with a document open also get a
/// default link from the new node to that document's anchor.
ops::AddNode createNodeWithDefaultLink(Platform platform,
                                       const std::optional<DocumentId>& currentDocument,
                                       std::string label, Vec3 position);

inline OpKind payloadKind(const OpPayload& p) {
  return static_cast<OpKind>(p.index());
}

struct Operation {
  std::uint64_t seq = 0;
  UserId actor;
  OpPayload payload;
  /// Milliseconds since room start.
  std::int64_t timestamp = 0;

  OpKind kind() const { return payloadKind(payload); }
};

enum class RejectReason {
  UnknownNode,
  UnknownLink,
  UnknownDocument,
  DuplicateLink,
  SelfLink,
  AnchorDeletion,
  InvalidPayload,
};

std::string_view rejectReasonName(RejectReason r);
std::optional<RejectReason> parseRejectReason(std::string_view name);

/// Thrown when JSON does not describe a well-formed operation.
class OperationFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json payloadToJson(const OpPayload& payload);
OpPayload payloadFromJson(OpKind kind, const nlohmann::json& j);

/// {seq, actor, kind, payload, timestamp}
nlohmann::json operationToJson(const Operation& op);
Operation operationFromJson(const nlohmann::json& j);

}  // namespace visrooms
