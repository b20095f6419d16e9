#include "swept/transport.hpp"

#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <ctime>

#if defined(__linux__)
#include <sys/prctl.h>
#endif

namespace swept {

std::chrono::nanoseconds thread_cpu_time() {
  timespec ts{};
  ::clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec);
}

// ---------------------------------------------------------------------------
// In-process transport

struct InProcTransport::State {
  using Key = std::tuple<int, int, std::uint32_t>;  // src, dest, tag

  explicit State(int n, std::chrono::milliseconds t) : size(n), timeout(t), counters(static_cast<std::size_t>(n)) {}

  int size;
  std::chrono::milliseconds timeout;
  std::mutex mu;
  std::condition_variable cv;
  std::map<Key, std::deque<Bytes>> boxes;
  std::vector<TransportCounters> counters;
  bool aborted = false;
  std::string abort_reason;
};

namespace {

class InProcEndpoint final : public Endpoint {
 public:
  InProcEndpoint(std::shared_ptr<InProcTransport::State> state, int rank) : state_(std::move(state)), rank_(rank) {}

  int rank() const override { return rank_; }

  void send(int dest, std::uint32_t tag, Bytes msg) override {
    check_rank(dest);
    {
      std::lock_guard lock(state_->mu);
      if (state_->aborted) throw TransportError("transport aborted: " + state_->abort_reason);
      auto& c = state_->counters[static_cast<std::size_t>(rank_)];
      c.messages_sent += 1;
      c.bytes_sent += msg.size();
      state_->boxes[{rank_, dest, tag}].push_back(std::move(msg));
    }
    state_->cv.notify_all();
  }

  Bytes recv(int src, std::uint32_t tag) override {
    check_rank(src);
    std::unique_lock lock(state_->mu);
    auto& box = state_->boxes[{src, rank_, tag}];
    const bool ready = state_->cv.wait_for(lock, state_->timeout, [&] { return state_->aborted || !box.empty(); });
    if (state_->aborted) throw TransportError("transport aborted: " + state_->abort_reason);
    if (!ready) {
      throw TransportError("rank " + std::to_string(rank_) + " timed out waiting for rank " + std::to_string(src) +
                           " tag " + std::to_string(tag));
    }
    Bytes msg = std::move(box.front());
    box.pop_front();
    auto& c = state_->counters[static_cast<std::size_t>(rank_)];
    c.messages_received += 1;
    c.bytes_received += msg.size();
    return msg;
  }

  TransportCounters counters() const override {
    std::lock_guard lock(state_->mu);
    return state_->counters[static_cast<std::size_t>(rank_)];
  }

 private:
  void check_rank(int r) const {
    if (r < 0 || r >= state_->size) throw TransportError("rank " + std::to_string(r) + " out of range");
  }

  std::shared_ptr<InProcTransport::State> state_;
  int rank_;
};

}  // namespace

InProcTransport::InProcTransport(int size, std::chrono::milliseconds timeout)
    : state_(std::make_shared<State>(size, timeout)) {
  if (size < 1) throw ValidationError("size", "transport needs at least one rank");
  for (int r = 0; r < size; ++r) endpoints_.push_back(std::make_unique<InProcEndpoint>(state_, r));
}

InProcTransport::~InProcTransport() = default;

int InProcTransport::size() const { return state_->size; }

std::vector<int> InProcTransport::local_ranks() const {
  std::vector<int> r(static_cast<std::size_t>(state_->size));
  for (int i = 0; i < state_->size; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

Endpoint& InProcTransport::endpoint(int rank) {
  if (rank < 0 || rank >= state_->size) throw TransportError("rank " + std::to_string(rank) + " out of range");
  return *endpoints_[static_cast<std::size_t>(rank)];
}

void InProcTransport::abort(const std::string& reason) {
  {
    std::lock_guard lock(state_->mu);
    if (!state_->aborted) state_->abort_reason = reason;
    state_->aborted = true;
  }
  state_->cv.notify_all();
}

// ---------------------------------------------------------------------------
// Latency injection

namespace {

using Clock = std::chrono::steady_clock;

void tighten_timer_slack() {
#if defined(__linux__)
  thread_local bool done = false;
  if (!done) {
    prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL);
    done = true;
  }
#endif
}

// Envelope: delivery deadline (steady_clock ns) and the sender's modelled
// clock (ns), both u64 little endian, then the untouched payload.
constexpr std::size_t kEnvelopeSize = 16;

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) p[b] = static_cast<std::uint8_t>(v >> (8 * b));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

class LatencyEndpoint final : public Endpoint {
 public:
  LatencyEndpoint(Endpoint& inner, std::chrono::nanoseconds tau) : inner_(inner), tau_(tau) {}

  int rank() const override { return inner_.rank(); }

  void send(int dest, std::uint32_t tag, Bytes msg) override {
    const auto deadline = static_cast<std::uint64_t>((Clock::now() + tau_).time_since_epoch().count());
    Bytes env(kEnvelopeSize + msg.size());
    put_u64(env.data(), deadline);
    {
      std::lock_guard lock(mu_);
      put_u64(env.data() + 8, static_cast<std::uint64_t>(modeled_now().count()));
      counters_.messages_sent += 1;
      counters_.bytes_sent += msg.size();
    }
    std::copy(msg.begin(), msg.end(), env.begin() + kEnvelopeSize);
    inner_.send(dest, tag, std::move(env));
  }

  Bytes recv(int src, std::uint32_t tag) override {
    Bytes env = inner_.recv(src, tag);
    if (env.size() < kEnvelopeSize) throw TransportError("latency envelope truncated");
    const Clock::time_point ready{Clock::duration{static_cast<Clock::rep>(get_u64(env.data()))}};
    const std::chrono::nanoseconds arrival{static_cast<std::int64_t>(get_u64(env.data() + 8)) + tau_.count()};
    const auto before = Clock::now();
    std::chrono::nanoseconds waited{0};
    if (before < ready) {
      tighten_timer_slack();
      std::this_thread::sleep_until(ready);
      waited = Clock::now() - before;
    }
    Bytes msg(env.begin() + kEnvelopeSize, env.end());
    {
      std::lock_guard lock(mu_);
      const auto now = modeled_now();
      if (arrival > now) {
        adjust_ += arrival - now;
        counters_.modeled_wait += arrival - now;
      }
      counters_.messages_received += 1;
      counters_.bytes_received += msg.size();
      counters_.injected_delay += waited;
    }
    return msg;
  }

  TransportCounters counters() const override {
    std::lock_guard lock(mu_);
    return counters_;
  }

 private:
  // Caller holds mu_.
  std::chrono::nanoseconds modeled_now() {
    const auto id = std::this_thread::get_id();
    if (id != owner_) {
      owner_ = id;
      adjust_ = std::chrono::nanoseconds{0};
    }
    return thread_cpu_time() + adjust_;
  }

  Endpoint& inner_;
  std::chrono::nanoseconds tau_;
  mutable std::mutex mu_;
  TransportCounters counters_;
  std::thread::id owner_;
  std::chrono::nanoseconds adjust_{0};
};

}  // namespace

LatencyTransport::LatencyTransport(std::unique_ptr<Transport> inner, std::chrono::nanoseconds tau)
    : inner_(std::move(inner)), tau_(tau) {
  if (tau.count() < 0) throw ValidationError("tau", "must be non-negative");
  endpoints_.resize(static_cast<std::size_t>(inner_->size()));
  for (int r : inner_->local_ranks()) {
    endpoints_[static_cast<std::size_t>(r)] = std::make_unique<LatencyEndpoint>(inner_->endpoint(r), tau_);
  }
}

LatencyTransport::~LatencyTransport() = default;

Endpoint& LatencyTransport::endpoint(int rank) {
  if (rank < 0 || rank >= size() || !endpoints_[static_cast<std::size_t>(rank)]) {
    throw TransportError("rank " + std::to_string(rank) + " is not local");
  }
  return *endpoints_[static_cast<std::size_t>(rank)];
}

// ---------------------------------------------------------------------------
// Roster

std::vector<RosterEntry> parse_roster(const std::string& text, const Topology& topo) {
  std::vector<RosterEntry> entries(static_cast<std::size_t>(topo.size()));
  std::vector<bool> seen(entries.size(), false);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    RosterEntry e;
    int port = 0;
    if (!(fields >> e.rank)) continue;  // blank or comment-only line
    const std::string where = "roster line " + std::to_string(line_no);
    if (!(fields >> e.coord.cx >> e.coord.cy >> e.host >> port)) {
      throw ValidationError("roster", where + ": expected `rank cx cy host port`");
    }
    std::string extra;
    if (fields >> extra) throw ValidationError("roster", where + ": trailing field '" + extra + "'");
    if (port <= 0 || port > 65535) throw ValidationError("roster", where + ": port out of range");
    e.port = static_cast<std::uint16_t>(port);
    if (e.rank < 0 || e.rank >= topo.size()) throw ValidationError("roster", where + ": rank out of range");
    if (!topo.contains(e.coord) || topo.rank_of(e.coord) != e.rank) {
      throw ValidationError("roster", where + ": coordinates do not match rank " + std::to_string(e.rank));
    }
    if (seen[static_cast<std::size_t>(e.rank)]) {
      throw ValidationError("roster", where + ": duplicate rank " + std::to_string(e.rank));
    }
    seen[static_cast<std::size_t>(e.rank)] = true;
    entries[static_cast<std::size_t>(e.rank)] = std::move(e);
  }
  for (std::size_t r = 0; r < seen.size(); ++r) {
    if (!seen[r]) throw ValidationError("roster", "missing rank " + std::to_string(r));
  }
  return entries;
}

std::vector<RosterEntry> load_roster(const std::filesystem::path& path, const Topology& topo) {
  std::ifstream in(path);
  if (!in) throw ValidationError("roster", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_roster(buf.str(), topo);
}

std::vector<int> communication_peers(const Topology& topo, int rank) {
  std::set<int> peers;
  for (Compass dir : {Compass::North, Compass::South, Compass::West, Compass::East}) {
    peers.insert(topo.neighbor_rank(rank, dir));
  }
  if (rank == 0) {
    for (int r = 0; r < topo.size(); ++r) peers.insert(r);
  } else {
    peers.insert(0);
  }
  peers.erase(rank);
  return {peers.begin(), peers.end()};
}

}  // namespace swept
