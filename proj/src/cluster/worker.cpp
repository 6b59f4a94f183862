#include "pyramidai/cluster/worker.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <exception>
#include <random>
#include <thread>

#include "pyramidai/cluster/wire.hpp"
#include "pyramidai/errors.hpp"
#include "pyramidai/rng.hpp"

namespace pyramidai::cluster {

namespace {

using Clock = std::chrono::steady_clock;

class WorkerLoop {
 public:
  WorkerLoop(Listener& listener, const WorkerOptions& options, TaskQueue initial,
             const GroundTruthPyramid& gt, const PredictionSource& src,
             const ThresholdSchedule& sched)
      : listener_(listener),
        opts_(options),
        gt_(gt),
        src_(src),
        sched_(sched),
        queue_(std::move(initial)),
        partial_(gt.geometry()),
        rng_(mix_seed(options.seed, 0xC1u, options.id)),
        workers_(static_cast<int>(options.peers.size())) {
    if (workers_ < 1) throw ConfigError("cluster needs at least one worker address");
    if (opts_.id < 0 || opts_.id >= workers_) {
      throw ConfigError("worker id " + std::to_string(opts_.id) + " outside peer list");
    }
    for (int j = 0; j < workers_; ++j) {
      if (j != opts_.id) victims_.push_back(j);
    }
    if (is_coordinator()) {
      partials_.resize(static_cast<std::size_t>(workers_));
      uploaded_.assign(static_cast<std::size_t>(workers_), false);
    }
  }

  WorkerOutcome run() {
    deadline_ = Clock::now() + opts_.run_timeout;
    connect_peers();
    for (;;) {
      if (Clock::now() > deadline_) {
        throw TransportError("worker " + std::to_string(opts_.id) + " timed out");
      }
      poll_io(queue_.empty() ? 20 : 0);
      if (shutdown_) break;
      if (!queue_.empty()) {
        process_one();
        continue;
      }
      if (waiting_for_ >= 0) continue;
      if (!victims_.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, victims_.size() - 1);
        waiting_for_ = victims_[pick(rng_)];
        ++stats_.steal_requests_sent;
        send(waiting_for_, WireMessage::steal_request(opts_.id));
        continue;
      }
      if (!done_local_) {
        done_local_ = true;
        if (is_coordinator()) {
          record_upload(opts_.id, partial_);
        } else {
          send(0, WireMessage::subtree(opts_.id, partial_));
        }
      }
      if (is_coordinator() && uploads_ == workers_) {
        for (int j = 1; j < workers_; ++j) send(j, WireMessage::shutdown(opts_.id));
        break;
      }
    }

    WorkerOutcome out{std::move(partial_), stats_, {}, std::nullopt};
    if (is_coordinator()) {
      out.gathered = gather(partials_);
      out.partials = std::move(partials_);
    }
    return out;
  }

 private:
  struct Inbound {
    Socket socket;
    FrameDecoder decoder;
    int peer = -1;
  };

  bool is_coordinator() const noexcept { return opts_.id == 0; }

  std::string peer_name(int j) const {
    return std::to_string(j) + " (" + to_string(opts_.peers[static_cast<std::size_t>(j)]) + ")";
  }

  void connect_peers() {
    outbound_.resize(static_cast<std::size_t>(workers_));
    for (int j = 0; j < workers_; ++j) {
      if (j == opts_.id) continue;
      outbound_[static_cast<std::size_t>(j)] =
          connect_to(opts_.peers[static_cast<std::size_t>(j)], opts_.connect_timeout);
    }
  }

  void send(int peer, const WireMessage& m) {
    send_all(outbound_[static_cast<std::size_t>(peer)], encode_frame(m), peer_name(peer));
    ++stats_.messages_sent;
  }

  void process_one() {
    const TileId t = queue_.front();
    queue_.pop_front();
    const Node node = analyze_tile(src_, sched_, t);
    partial_.insert(t, node);
    ++stats_.tiles_processed;
    if (node.decision == Decision::ZoomIn) {
      kids_.clear();
      append_children(gt_.geometry(), t, kids_);
      queue_.insert(queue_.end(), kids_.begin(), kids_.end());
    }
  }

  void record_upload(int from, ExecutionTree tree) {
    auto idx = static_cast<std::size_t>(from);
    if (uploaded_[idx]) throw IntegrityError("duplicate subtree upload from worker " + std::to_string(from));
    uploaded_[idx] = true;
    partials_[idx] = std::move(tree);
    ++uploads_;
  }

  void drop_victim(int j) {
    victims_.erase(std::remove(victims_.begin(), victims_.end(), j), victims_.end());
  }

  void handle(const WireMessage& m) {
    if (m.sender < 0 || m.sender >= workers_ || m.sender == opts_.id) {
      throw DataError("message from unknown worker " + std::to_string(m.sender));
    }
    switch (m.type) {
      case MessageType::StealRequest:
        ++stats_.requests_served;
        drop_victim(m.sender);  // the requester has no work left
        if (queue_.size() >= 2) {
          const TileId t = queue_.back();
          queue_.pop_back();
          ++stats_.tasks_granted;
          send(m.sender, WireMessage::task(opts_.id, t));
        } else {
          send(m.sender, WireMessage::empty(opts_.id));
        }
        break;
      case MessageType::TaskGrant:
        if (m.sender != waiting_for_) throw DataError("unsolicited task from worker " + std::to_string(m.sender));
        waiting_for_ = -1;
        ++stats_.tasks_received;
        queue_.push_back(*m.tile);
        break;
      case MessageType::Empty:
        if (m.sender != waiting_for_) throw DataError("unsolicited empty reply from worker " + std::to_string(m.sender));
        waiting_for_ = -1;
        ++stats_.empties_received;
        drop_victim(m.sender);
        break;
      case MessageType::SubtreeUpload:
        if (!is_coordinator()) throw DataError("subtree upload sent to non-coordinator");
        record_upload(m.sender, subtree_to_tree(m, gt_.geometry()));
        break;
      case MessageType::Shutdown:
        if (m.sender != 0) throw DataError("shutdown from non-coordinator");
        shutdown_ = true;
        break;
    }
  }

  bool eof_expected(int peer) const {
    if (!is_coordinator()) return done_local_;
    if (peer >= 0) return uploaded_[static_cast<std::size_t>(peer)];
    return uploads_ == workers_;
  }

  void read_from(Inbound& in) {
    char buf[64 * 1024];
    for (;;) {
      const ssize_t n = ::recv(in.socket.fd(), buf, sizeof buf, 0);
      if (n > 0) {
        in.decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        while (auto m = in.decoder.next()) {
          in.peer = m->sender;
          handle(*m);
        }
        continue;
      }
      if (n == 0) {
        // An unidentified connection is named through its outbound twin.
        if (in.peer >= 0 && !eof_expected(in.peer)) lost(in.peer);
        in.socket.close();
        return;
      }
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      throw TransportError("receive from peer " +
                           (in.peer >= 0 ? peer_name(in.peer) : std::string("(unidentified)")) +
                           " failed: " + std::strerror(errno));
    }
  }

  [[noreturn]] void lost(int peer) const {
    throw TransportError("worker " + std::to_string(opts_.id) + " lost connection to peer " +
                         peer_name(peer));
  }

  // Peers never write on our outbound connections, so readability there
  // means the peer closed or reset it.
  void check_outbound(int peer) {
    auto& s = outbound_[static_cast<std::size_t>(peer)];
    char byte;
    const ssize_t n = ::recv(s.fd(), &byte, 1, MSG_DONTWAIT);
    if (n > 0) throw DataError("unexpected data from worker " + std::to_string(peer));
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) return;
    if (!eof_expected(peer)) lost(peer);
    s.close();
  }

  void poll_io(int timeout_ms) {
    if (workers_ == 1) return;
    std::vector<pollfd> fds;
    std::vector<int> outbound_peers;
    fds.push_back({listener_.fd(), POLLIN, 0});
    for (const auto& in : inbound_) fds.push_back({in.socket.fd(), POLLIN, 0});
    for (int j = 0; j < workers_; ++j) {
      const auto& s = outbound_[static_cast<std::size_t>(j)];
      if (j == opts_.id || !s.valid()) continue;
      fds.push_back({s.fd(), POLLIN, 0});
      outbound_peers.push_back(j);
    }
    const int ready = ::poll(fds.data(), fds.size(), timeout_ms);
    if (ready < 0) {
      if (errno == EINTR) return;
      throw TransportError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) return;
    const std::size_t first_out = 1 + inbound_.size();
    for (std::size_t i = 1; i < first_out; ++i) {
      if (fds[i].revents != 0) read_from(inbound_[i - 1]);
    }
    for (std::size_t i = first_out; i < fds.size(); ++i) {
      if (fds[i].revents != 0) check_outbound(outbound_peers[i - first_out]);
    }
    if (fds[0].revents & POLLIN) {
      while (true) {
        Socket s = listener_.accept();
        if (!s.valid()) break;
        inbound_.push_back({std::move(s), {}, -1});
      }
    }
    inbound_.erase(std::remove_if(inbound_.begin(), inbound_.end(),
                                  [](const Inbound& in) { return !in.socket.valid(); }),
                   inbound_.end());
  }

  Listener& listener_;
  const WorkerOptions& opts_;
  const GroundTruthPyramid& gt_;
  const PredictionSource& src_;
  const ThresholdSchedule& sched_;

  TaskQueue queue_;
  ExecutionTree partial_;
  std::mt19937_64 rng_;
  int workers_;
  std::vector<int> victims_;
  int waiting_for_ = -1;
  bool done_local_ = false;
  bool shutdown_ = false;
  Clock::time_point deadline_;

  std::vector<Socket> outbound_;
  std::vector<Inbound> inbound_;
  std::vector<TileId> kids_;
  WorkerStats stats_;

  std::vector<ExecutionTree> partials_;
  std::vector<bool> uploaded_;
  int uploads_ = 0;
};

}  // namespace

WorkerOutcome worker_run(Listener& listener, const WorkerOptions& options, TaskQueue initial,
                         const GroundTruthPyramid& gt, const PredictionSource& src,
                         const ThresholdSchedule& sched) {
  if (sched.num_levels() != gt.geometry().num_levels()) {
    throw ConfigError("schedule does not match pyramid levels");
  }
  return WorkerLoop(listener, options, std::move(initial), gt, src, sched).run();
}

ExecutionTree gather(std::span<const ExecutionTree> partials) {
  if (partials.empty()) throw IntegrityError("nothing to gather");
  ExecutionTree out(partials.front().geometry());
  for (const auto& p : partials) out.merge(p);
  out.validate();
  return out;
}

std::size_t overlapping_nodes(std::span<const ExecutionTree> partials) {
  if (partials.empty()) return 0;
  ExecutionTree seen(partials.front().geometry());
  std::size_t overlap = 0;
  for (const auto& p : partials) {
    p.for_each([&](const TileId& t, const Node& n) {
      if (seen.contains(t)) ++overlap;
      else seen.insert(t, n);
    });
  }
  return overlap;
}

LocalClusterResult run_local_cluster(const GroundTruthPyramid& gt, const PredictionSource& src,
                                     const ThresholdSchedule& sched, int workers,
                                     std::uint64_t seed, std::chrono::milliseconds run_timeout) {
  if (workers < 1) throw ConfigError("number of workers must be >= 1");
  std::vector<Listener> listeners;
  std::vector<PeerAddress> peers;
  for (int i = 0; i < workers; ++i) {
    listeners.emplace_back(PeerAddress{"127.0.0.1", 0});
    peers.push_back({"127.0.0.1", listeners.back().port()});
  }
  auto queues = distribute(gt.roots(), workers, Distribution::RoundRobin);

  std::vector<WorkerOptions> options(static_cast<std::size_t>(workers));
  std::vector<WorkerOutcome> outcomes(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  for (int i = 0; i < workers; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    options[idx] = {i, peers, seed, std::chrono::milliseconds(10000), run_timeout};
    threads.emplace_back([&, idx] {
      try {
        outcomes[idx] = worker_run(listeners[idx], options[idx], std::move(queues[idx]), gt, src, sched);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  LocalClusterResult result;
  result.tree = std::move(*outcomes.front().gathered);
  result.partials = std::move(outcomes.front().partials);
  for (const auto& o : outcomes) result.stats.push_back(o.stats);
  return result;
}

}  // namespace pyramidai::cluster
