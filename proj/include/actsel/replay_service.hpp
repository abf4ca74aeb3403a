#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "actsel/replay.hpp"

namespace actsel::replay_service {

// Wire protocol, loopback TCP. Every request and response is a frame:
//   u32 length (big-endian, bytes after the length field)
//   u8 opcode
//   payload
// Opcodes: 1 INSERT (payload: repeated [u64 id, u64 score-bits], both
// big-endian; reply: u64 inserted_total), 2 SAMPLE (payload: u64 b; reply:
// repeated u64 id), 3 STATS (empty; reply: u64 inserted, u64 sampled,
// u64 live_unconsumed). Errors close the connection.

struct BankStats {
  std::uint64_t inserted_total = 0;
  std::uint64_t sampled_total = 0;
  std::uint64_t live_unconsumed = 0;
};

class ReplayServer {
 public:
  // Binds 127.0.0.1 on an ephemeral port (or the given one); the background
  // acceptor hands each connection to its own thread until stop().
  ReplayServer(replay::MemoryBank& bank, std::uint64_t sample_seed,
               int port = 0);
  ~ReplayServer();

  int port() const { return port_; }
  void stop();

 private:
  void serve();
  void handle_client(int fd);

  replay::MemoryBank& bank_;
  Rng sample_rng_;
  std::mutex rng_mu_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
  std::mutex clients_mu_;
  std::set<int> client_fds_;
  std::vector<std::thread> client_threads_;
};

class ReplayClient {
 public:
  explicit ReplayClient(int port);
  ~ReplayClient();

  void insert(const std::vector<replay::ScoredEntry>& batch);
  std::vector<std::uint64_t> sample(std::size_t b);
  BankStats stats();

 private:
  std::vector<std::uint8_t> roundtrip(std::uint8_t opcode,
                                      const std::vector<std::uint8_t>& payload);
  int fd_ = -1;
};

}  // namespace actsel::replay_service
