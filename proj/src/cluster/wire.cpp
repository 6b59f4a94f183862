#include "pyramidai/cluster/wire.hpp"

#include "pyramidai/errors.hpp"
#include "pyramidai/serialize.hpp"

namespace pyramidai::cluster {

const char* to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::StealRequest: return "steal_req";
    case MessageType::TaskGrant: return "task";
    case MessageType::Empty: return "empty";
    case MessageType::SubtreeUpload: return "subtree";
    case MessageType::Shutdown: return "shutdown";
  }
  return "?";
}

namespace {

MessageType parse_type(const std::string& s) {
  if (s == "steal_req") return MessageType::StealRequest;
  if (s == "task") return MessageType::TaskGrant;
  if (s == "empty") return MessageType::Empty;
  if (s == "subtree") return MessageType::SubtreeUpload;
  if (s == "shutdown") return MessageType::Shutdown;
  throw DataError("unknown message type '" + s + "'");
}

}  // namespace

WireMessage WireMessage::subtree(int from, const ExecutionTree& tree) {
  WireMessage m{MessageType::SubtreeUpload, from, {}, {}};
  m.nodes.reserve(tree.size());
  tree.for_each([&](const TileId& t, const Node& n) { m.nodes.push_back({t, n}); });
  return m;
}

std::string encode_body(const WireMessage& m) {
  Json j = {{"type", to_string(m.type)}, {"from", m.sender}};
  if (m.type == MessageType::TaskGrant) {
    if (!m.tile) throw DataError("task message without tile");
    j["tile"] = tile_to_json(*m.tile);
  }
  if (m.type == MessageType::SubtreeUpload) {
    Json nodes = Json::array();
    for (const auto& n : m.nodes) nodes.push_back(node_to_json(n.tile, n.node));
    j["nodes"] = std::move(nodes);
  }
  return j.dump();
}

WireMessage decode_body(std::string_view body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed message body: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string() || !j.contains("from") ||
      !j.at("from").is_number_integer()) {
    throw DataError("message needs string 'type' and integer 'from'");
  }
  WireMessage m;
  m.type = parse_type(j.at("type").get<std::string>());
  m.sender = j.at("from").get<int>();
  if (m.type == MessageType::TaskGrant) {
    if (!j.contains("tile")) throw DataError("task message without tile");
    m.tile = tile_from_json(j.at("tile"));
  }
  if (m.type == MessageType::SubtreeUpload) {
    if (!j.contains("nodes") || !j.at("nodes").is_array()) throw DataError("subtree message without nodes");
    for (const auto& n : j.at("nodes")) {
      if (!n.contains("p") || !n.at("p").is_number() || !n.contains("decision") ||
          !n.at("decision").is_string()) {
        throw DataError("subtree node needs 'p' and 'decision'");
      }
      m.nodes.push_back({tile_from_json(n), {n.at("p").get<double>(),
                                             parse_decision(n.at("decision").get<std::string>())}});
    }
  }
  return m;
}

std::string encode_frame(const WireMessage& m) {
  const std::string body = encode_body(m);
  if (body.size() > kMaxFrameBytes) throw DataError("message too large to frame");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out += body;
  return out;
}

void FrameDecoder::feed(std::string_view bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.append(bytes);
}

std::optional<WireMessage> FrameDecoder::next() {
  if (buffered() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data() + offset_);
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                          (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  if (n > kMaxFrameBytes) throw DataError("frame of " + std::to_string(n) + " bytes exceeds limit");
  if (buffered() < 4 + std::size_t{n}) return std::nullopt;
  WireMessage m = decode_body(std::string_view(buffer_).substr(offset_ + 4, n));
  offset_ += 4 + n;
  if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return m;
}

ExecutionTree subtree_to_tree(const WireMessage& m, const PyramidGeometry& geometry) {
  if (m.type != MessageType::SubtreeUpload) throw DataError("not a subtree message");
  ExecutionTree tree(geometry);
  for (const auto& n : m.nodes) tree.insert(n.tile, n.node);
  return tree;
}

}  // namespace pyramidai::cluster
