#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "swept/codec.hpp"
#include "swept/transport.hpp"

namespace swept {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t w = ::send(fd, data, len, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send"));
    }
    data += w;
    len -= static_cast<std::size_t>(w);
  }
}

// False on orderly EOF before any byte was read.
bool read_all(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t r = ::recv(fd, data + got, len - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw TransportError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("recv"));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + host + "': " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

struct TcpTransport::State {
  using Key = std::pair<int, std::uint32_t>;  // src, tag

  int size = 0;
  int local_rank = 0;
  std::chrono::milliseconds timeout{0};
  int listen_fd = -1;
  std::map<int, int> peer_fd;
  std::map<int, std::unique_ptr<std::mutex>> send_mu;
  std::vector<std::thread> readers;

  std::mutex mu;
  std::condition_variable cv;
  std::map<Key, std::deque<Bytes>> boxes;
  std::map<int, bool> peer_closed;
  TransportCounters counters;
  bool aborted = false;
  std::string abort_reason;

  ~State() {
    for (auto& [peer, fd] : peer_fd) ::shutdown(fd, SHUT_RDWR);
    for (auto& t : readers) {
      if (t.joinable()) t.join();
    }
    for (auto& [peer, fd] : peer_fd) ::close(fd);
    if (listen_fd >= 0) ::close(listen_fd);
  }

  void deliver(int src, std::uint32_t tag, Bytes msg) {
    {
      std::lock_guard lock(mu);
      boxes[{src, tag}].push_back(std::move(msg));
    }
    cv.notify_all();
  }

  void reader_loop(int peer, int fd) {
    try {
      for (;;) {
        std::array<std::uint8_t, kFrameHeaderSize> hdr{};
        if (!read_all(fd, hdr.data(), hdr.size())) break;
        const FrameHeader h = decode_frame_header(hdr);
        Bytes payload(h.length);
        if (h.length > 0 && !read_all(fd, payload.data(), payload.size())) {
          throw TransportError("connection closed mid-frame");
        }
        deliver(peer, h.tag, std::move(payload));
      }
    } catch (const std::exception&) {
      // Treated as a closed peer below; pending receivers get a TransportError.
    }
    {
      std::lock_guard lock(mu);
      peer_closed[peer] = true;
    }
    cv.notify_all();
  }
};

namespace {

class TcpEndpoint final : public Endpoint {
 public:
  explicit TcpEndpoint(std::shared_ptr<TcpTransport::State> state) : state_(std::move(state)) {}

  int rank() const override { return state_->local_rank; }

  void send(int dest, std::uint32_t tag, Bytes msg) override {
    {
      std::lock_guard lock(state_->mu);
      if (state_->aborted) throw TransportError("transport aborted: " + state_->abort_reason);
      state_->counters.messages_sent += 1;
      state_->counters.bytes_sent += msg.size();
    }
    if (dest == state_->local_rank) {
      state_->deliver(dest, tag, std::move(msg));
      return;
    }
    const auto it = state_->peer_fd.find(dest);
    if (it == state_->peer_fd.end()) {
      throw TransportError("rank " + std::to_string(state_->local_rank) + " has no connection to rank " +
                           std::to_string(dest));
    }
    const Bytes frame = encode_frame(tag, msg);
    std::lock_guard lock(*state_->send_mu.at(dest));
    write_all(it->second, frame.data(), frame.size());
  }

  Bytes recv(int src, std::uint32_t tag) override {
    if (src != state_->local_rank && !state_->peer_fd.contains(src)) {
      throw TransportError("rank " + std::to_string(state_->local_rank) + " has no connection to rank " +
                           std::to_string(src));
    }
    std::unique_lock lock(state_->mu);
    auto& box = state_->boxes[{src, tag}];
    const bool ready = state_->cv.wait_for(lock, state_->timeout, [&] {
      return state_->aborted || !box.empty() || state_->peer_closed[src];
    });
    if (state_->aborted) throw TransportError("transport aborted: " + state_->abort_reason);
    if (box.empty()) {
      if (!ready) {
        throw TransportError("rank " + std::to_string(state_->local_rank) + " timed out waiting for rank " +
                             std::to_string(src) + " tag " + std::to_string(tag));
      }
      throw TransportError("rank " + std::to_string(src) + " closed the connection");
    }
    Bytes msg = std::move(box.front());
    box.pop_front();
    state_->counters.messages_received += 1;
    state_->counters.bytes_received += msg.size();
    return msg;
  }

  TransportCounters counters() const override {
    std::lock_guard lock(state_->mu);
    return state_->counters;
  }

 private:
  std::shared_ptr<TcpTransport::State> state_;
};

}  // namespace

TcpTransport::TcpTransport(std::vector<RosterEntry> roster, int local_rank, std::vector<int> peers,
                           std::chrono::milliseconds timeout)
    : state_(std::make_shared<State>()) {
  auto& st = *state_;
  st.size = static_cast<int>(roster.size());
  st.local_rank = local_rank;
  st.timeout = timeout;
  if (local_rank < 0 || local_rank >= st.size) throw ValidationError("rank", "local rank outside roster");
  std::sort(peers.begin(), peers.end());
  peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
  std::erase(peers, local_rank);

  const RosterEntry& me = roster[static_cast<std::size_t>(local_rank)];
  st.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (st.listen_fd < 0) throw TransportError(sys_error("socket"));
  int one = 1;
  ::setsockopt(st.listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  const sockaddr_in self_addr = resolve(me.host, me.port);
  if (::bind(st.listen_fd, reinterpret_cast<const sockaddr*>(&self_addr), sizeof(self_addr)) < 0) {
    throw TransportError(sys_error("bind " + me.host + ":" + std::to_string(me.port)));
  }
  if (::listen(st.listen_fd, 64) < 0) throw TransportError(sys_error("listen"));

  const auto deadline = std::chrono::steady_clock::now() + timeout;

  // Higher ranks are dialled; their listen backlog completes the handshake
  // before they call accept, so this cannot deadlock.
  for (int peer : peers) {
    if (peer < local_rank) continue;
    const RosterEntry& e = roster[static_cast<std::size_t>(peer)];
    const sockaddr_in addr = resolve(e.host, e.port);
    for (;;) {
      const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw TransportError(sys_error("socket"));
      if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
        set_nodelay(fd);
        const std::array<std::uint8_t, 4> hello{static_cast<std::uint8_t>(local_rank),
                                                static_cast<std::uint8_t>(local_rank >> 8),
                                                static_cast<std::uint8_t>(local_rank >> 16),
                                                static_cast<std::uint8_t>(local_rank >> 24)};
        write_all(fd, hello.data(), hello.size());
        st.peer_fd[peer] = fd;
        break;
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() > deadline) {
        throw TransportError("timed out connecting to rank " + std::to_string(peer) + " at " + e.host + ":" +
                             std::to_string(e.port));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  const auto lower = static_cast<std::size_t>(std::count_if(peers.begin(), peers.end(), [&](int p) { return p < local_rank; }));
  std::size_t accepted = 0;
  while (accepted < lower) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    pollfd pfd{st.listen_fd, POLLIN, 0};
    const int ready = left.count() > 0 ? ::poll(&pfd, 1, static_cast<int>(left.count())) : 0;
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) throw TransportError(sys_error("poll"));
    if (ready == 0) {
      throw TransportError("rank " + std::to_string(local_rank) + " timed out waiting for " +
                           std::to_string(lower - accepted) + " lower-ranked peer(s) to connect");
    }
    const int fd = ::accept(st.listen_fd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("accept"));
    }
    std::array<std::uint8_t, 4> hello{};
    if (!read_all(fd, hello.data(), hello.size())) {
      ::close(fd);
      continue;
    }
    const int peer = hello[0] | (hello[1] << 8) | (hello[2] << 16) | (hello[3] << 24);
    if (peer >= local_rank || !std::binary_search(peers.begin(), peers.end(), peer) || st.peer_fd.count(peer) != 0) {
      ::close(fd);
      throw TransportError("unexpected connection from rank " + std::to_string(peer));
    }
    set_nodelay(fd);
    st.peer_fd[peer] = fd;
    ++accepted;
  }

  for (auto& [peer, fd] : st.peer_fd) {
    st.send_mu[peer] = std::make_unique<std::mutex>();
    st.peer_closed[peer] = false;
  }
  for (auto& [peer, fd] : st.peer_fd) {
    st.readers.emplace_back([s = state_.get(), p = peer, f = fd] { s->reader_loop(p, f); });
  }
  endpoint_ = std::make_unique<TcpEndpoint>(state_);
}

TcpTransport::~TcpTransport() = default;

int TcpTransport::size() const { return state_->size; }

std::vector<int> TcpTransport::local_ranks() const { return {state_->local_rank}; }

Endpoint& TcpTransport::endpoint(int rank) {
  if (rank != state_->local_rank) throw TransportError("rank " + std::to_string(rank) + " is not local");
  return *endpoint_;
}

void TcpTransport::abort(const std::string& reason) {
  {
    std::lock_guard lock(state_->mu);
    if (!state_->aborted) state_->abort_reason = reason;
    state_->aborted = true;
  }
  state_->cv.notify_all();
}

}  // namespace swept
