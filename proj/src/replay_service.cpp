#include "actsel/replay_service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace actsel::replay_service {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t got = ::recv(fd, p, n, 0);
    if (got <= 0) return false;
    p += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

bool write_exact(int fd, const void* buf, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t sent = ::send(fd, p, n, MSG_NOSIGNAL);
    if (sent <= 0) return false;
    p += sent;
    n -= static_cast<std::size_t>(sent);
  }
  return true;
}

bool send_frame(int fd, std::uint8_t opcode,
                const std::vector<std::uint8_t>& payload) {
  std::uint8_t header[5];
  const std::uint32_t len = static_cast<std::uint32_t>(payload.size() + 1);
  header[0] = static_cast<std::uint8_t>((len >> 24) & 0xff);
  header[1] = static_cast<std::uint8_t>((len >> 16) & 0xff);
  header[2] = static_cast<std::uint8_t>((len >> 8) & 0xff);
  header[3] = static_cast<std::uint8_t>(len & 0xff);
  header[4] = opcode;
  if (!write_exact(fd, header, 5)) return false;
  return payload.empty() || write_exact(fd, payload.data(), payload.size());
}

// Returns false on EOF or malformed frame.
bool recv_frame(int fd, std::uint8_t& opcode,
                std::vector<std::uint8_t>& payload) {
  std::uint8_t lenbuf[4];
  if (!read_exact(fd, lenbuf, 4)) return false;
  const std::uint32_t len = (std::uint32_t(lenbuf[0]) << 24) |
                            (std::uint32_t(lenbuf[1]) << 16) |
                            (std::uint32_t(lenbuf[2]) << 8) |
                            std::uint32_t(lenbuf[3]);
  if (len < 1 || len > (1u << 24)) return false;
  if (!read_exact(fd, &opcode, 1)) return false;
  payload.resize(len - 1);
  return payload.empty() || read_exact(fd, payload.data(), payload.size());
}

constexpr std::uint8_t kOpInsert = 1;
constexpr std::uint8_t kOpSample = 2;
constexpr std::uint8_t kOpStats = 3;

}  // namespace

ReplayServer::ReplayServer(replay::MemoryBank& bank, std::uint64_t sample_seed,
                           int port)
    : bank_(bank), sample_rng_(sample_seed) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("replay server: socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
      0) {
    ::close(listen_fd_);
    throw std::runtime_error("replay server: bind failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 8) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("replay server: listen failed");
  }
  thread_ = std::thread(&ReplayServer::serve, this);
}

ReplayServer::~ReplayServer() { stop(); }

void ReplayServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (thread_.joinable()) thread_.join();
  for (std::thread& t : client_threads_)
    if (t.joinable()) t.join();
}

void ReplayServer::serve() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;
    std::lock_guard<std::mutex> lock(clients_mu_);
    client_fds_.insert(fd);
    client_threads_.emplace_back([this, fd] {
      handle_client(fd);
      std::lock_guard<std::mutex> inner(clients_mu_);
      client_fds_.erase(fd);
      ::close(fd);
    });
  }
}

void ReplayServer::handle_client(int fd) {
  std::uint8_t opcode = 0;
  std::vector<std::uint8_t> payload;
  while (!stopping_.load() && recv_frame(fd, opcode, payload)) {
    std::vector<std::uint8_t> reply;
    try {
      switch (opcode) {
        case kOpInsert: {
          if (payload.size() % 16 != 0) return;
          std::vector<replay::ScoredEntry> batch(payload.size() / 16);
          for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i].id = get_u64(payload.data() + 16 * i);
            const std::uint64_t bits = get_u64(payload.data() + 16 * i + 8);
            double score;
            std::memcpy(&score, &bits, sizeof(score));
            batch[i].score = score;
          }
          bank_.insert(batch);
          put_u64(reply, bank_.inserted_total());
          break;
        }
        case kOpSample: {
          if (payload.size() != 8) return;
          const std::uint64_t b = get_u64(payload.data());
          std::vector<std::uint64_t> ids;
          {
            std::lock_guard<std::mutex> lock(rng_mu_);
            ids = bank_.sample_prioritized(static_cast<std::size_t>(b),
                                           sample_rng_);
          }
          for (std::uint64_t id : ids) put_u64(reply, id);
          break;
        }
        case kOpStats: {
          put_u64(reply, bank_.inserted_total());
          put_u64(reply, bank_.sampled_total());
          put_u64(reply, bank_.live_unconsumed());
          break;
        }
        default:
          return;
      }
    } catch (const std::exception&) {
      return;  // protocol has no error frame; drop the connection
    }
    if (!send_frame(fd, opcode, reply)) return;
  }
}

ReplayClient::ReplayClient(int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("replay client: socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    throw std::runtime_error("replay client: connect failed");
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

ReplayClient::~ReplayClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::uint8_t> ReplayClient::roundtrip(
    std::uint8_t opcode, const std::vector<std::uint8_t>& payload) {
  if (!send_frame(fd_, opcode, payload))
    throw std::runtime_error("replay client: send failed");
  std::uint8_t got_op = 0;
  std::vector<std::uint8_t> reply;
  if (!recv_frame(fd_, got_op, reply) || got_op != opcode)
    throw std::runtime_error("replay client: request rejected");
  return reply;
}

void ReplayClient::insert(const std::vector<replay::ScoredEntry>& batch) {
  std::vector<std::uint8_t> payload;
  payload.reserve(batch.size() * 16);
  for (const replay::ScoredEntry& e : batch) {
    put_u64(payload, e.id);
    std::uint64_t bits;
    std::memcpy(&bits, &e.score, sizeof(bits));
    put_u64(payload, bits);
  }
  roundtrip(kOpInsert, payload);
}

std::vector<std::uint64_t> ReplayClient::sample(std::size_t b) {
  std::vector<std::uint8_t> payload;
  put_u64(payload, b);
  const std::vector<std::uint8_t> reply = roundtrip(kOpSample, payload);
  if (reply.size() != b * 8)
    throw std::runtime_error("replay client: short sample reply");
  std::vector<std::uint64_t> ids(b);
  for (std::size_t i = 0; i < b; ++i) ids[i] = get_u64(reply.data() + 8 * i);
  return ids;
}

BankStats ReplayClient::stats() {
  const std::vector<std::uint8_t> reply = roundtrip(kOpStats, {});
  if (reply.size() != 24)
    throw std::runtime_error("replay client: short stats reply");
  BankStats s;
  s.inserted_total = get_u64(reply.data());
  s.sampled_total = get_u64(reply.data() + 8);
  s.live_unconsumed = get_u64(reply.data() + 16);
  return s;
}

}  // namespace actsel::replay_service
