#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pyramidai/engine.hpp"

namespace pyramidai::cluster {

enum class MessageType { StealRequest, TaskGrant, Empty, SubtreeUpload, Shutdown };

const char* to_string(MessageType t) noexcept;

struct SubtreeNode {
  TileId tile;
  Node node;

  friend bool operator==(const SubtreeNode&, const SubtreeNode&) = default;
};

/// One protocol message. `tile` is set only for TaskGrant, `nodes` only for
/// SubtreeUpload.
struct WireMessage {
  MessageType type = MessageType::StealRequest;
  int sender = 0;
  std::optional<TileId> tile;
  std::vector<SubtreeNode> nodes;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;

  static WireMessage steal_request(int from) { return {MessageType::StealRequest, from, {}, {}}; }
  static WireMessage task(int from, const TileId& t) { return {MessageType::TaskGrant, from, t, {}}; }
  static WireMessage empty(int from) { return {MessageType::Empty, from, {}, {}}; }
  static WireMessage shutdown(int from) { return {MessageType::Shutdown, from, {}, {}}; }
  static WireMessage subtree(int from, const ExecutionTree& tree);
};

/// Frames larger than this are rejected on decode.
inline constexpr std::uint32_t kMaxFrameBytes = 256u << 20;

/// UTF-8 JSON body: {"type":"steal_req|task|empty|subtree|shutdown","from":id,...}.
std::string encode_body(const WireMessage& m);
/// Throws DataError for malformed bodies.
WireMessage decode_body(std::string_view body);

/// 4-byte big-endian length prefix followed by the JSON body.
std::string encode_frame(const WireMessage& m);

/// Incremental frame parser for a byte stream.
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  /// Next complete message, if buffered. Throws DataError for oversized or
  /// malformed frames.
  std::optional<WireMessage> next();
  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  std::string buffer_;
  std::size_t offset_ = 0;
};

/// Rebuilds a partial tree from SubtreeUpload nodes.
ExecutionTree subtree_to_tree(const WireMessage& m, const PyramidGeometry& geometry);

}  // namespace pyramidai::cluster
