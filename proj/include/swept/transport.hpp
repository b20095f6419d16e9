#pragma once

// Message transports. An Endpoint is one rank's view: reliable, FIFO per
// (source, destination, tag) channel, buffered sends and blocking receives.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "swept/grid.hpp"

namespace swept {

using Bytes = std::vector<std::uint8_t>;

struct TransportCounters {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  /// Time receivers spent held back by injected latency.
  std::chrono::nanoseconds injected_delay{0};
  /// Idle time on the receiver's modelled clock (see LatencyTransport).
  std::chrono::nanoseconds modeled_wait{0};
};

/// CPU time consumed by the calling thread.
std::chrono::nanoseconds thread_cpu_time();

class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual int rank() const = 0;
  virtual void send(int dest, std::uint32_t tag, Bytes msg) = 0;
  virtual Bytes recv(int src, std::uint32_t tag) = 0;
  virtual TransportCounters counters() const = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;

  virtual int size() const = 0;
  /// Ranks whose endpoints live in this process.
  virtual std::vector<int> local_ranks() const = 0;
  virtual Endpoint& endpoint(int rank) = 0;
  /// Wakes every blocked receiver with a TransportError. Used to tear down a
  /// run after one worker failed.
  virtual void abort(const std::string& reason) = 0;
};

/// All ranks in one process, delivering through shared mailboxes.
class InProcTransport final : public Transport {
 public:
  explicit InProcTransport(int size, std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~InProcTransport() override;

  int size() const override;
  std::vector<int> local_ranks() const override;
  Endpoint& endpoint(int rank) override;
  void abort(const std::string& reason) override;

  struct State;

 private:
  std::shared_ptr<State> state_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

/// Decorator that makes each message visible to recv no earlier than its send
/// time plus `tau`. Payload bytes pass through unchanged.
///
/// Each endpoint also keeps a modelled clock for its rank, as if every rank
/// had a core of its own: the clock advances with the thread's CPU time, each
/// message is stamped with the sender's clock, and a receive moves the clock
/// forward to at least stamp + tau. The forward moves are reported as
/// `modeled_wait`. The clock restarts when a new thread uses the endpoint.
class LatencyTransport final : public Transport {
 public:
  LatencyTransport(std::unique_ptr<Transport> inner, std::chrono::nanoseconds tau);
  ~LatencyTransport() override;

  int size() const override { return inner_->size(); }
  std::vector<int> local_ranks() const override { return inner_->local_ranks(); }
  Endpoint& endpoint(int rank) override;
  void abort(const std::string& reason) override { inner_->abort(reason); }

  std::chrono::nanoseconds tau() const noexcept { return tau_; }

 private:
  std::unique_ptr<Transport> inner_;
  std::chrono::nanoseconds tau_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

/// One line of a roster file: `rank cx cy host port`.
struct RosterEntry {
  int rank = 0;
  RankCoord coord;
  std::string host;
  std::uint16_t port = 0;
};

std::vector<RosterEntry> parse_roster(const std::string& text, const Topology& topo);
std::vector<RosterEntry> load_roster(const std::filesystem::path& path, const Topology& topo);

/// Ranks `rank` exchanges messages with: its four face neighbours, plus rank 0
/// (and, for rank 0, everyone) for gathering results. Self is excluded.
std::vector<int> communication_peers(const Topology& topo, int rank);

/// One rank per process over TCP. The constructor listens on the roster port
/// of `local_rank`, then builds a full-duplex connection to each of `peers`
/// (lower rank accepts, higher rank connects). Self-sends are delivered
/// locally.
class TcpTransport final : public Transport {
 public:
  TcpTransport(std::vector<RosterEntry> roster, int local_rank, std::vector<int> peers,
               std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~TcpTransport() override;

  int size() const override;
  std::vector<int> local_ranks() const override;
  Endpoint& endpoint(int rank) override;
  void abort(const std::string& reason) override;

  struct State;

 private:
  std::shared_ptr<State> state_;
  std::unique_ptr<Endpoint> endpoint_;
};

}  // namespace swept
