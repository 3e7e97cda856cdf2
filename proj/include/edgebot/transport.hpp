#pragma once

// Ordered reliable duplex byte streams: an in-memory loopback pair for tests
// and deterministic runs, and a non-blocking TCP socket for live runs.

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace edgebot::net {

class ByteStream {
 public:
  virtual ~ByteStream() = default;

  // Non-blocking: accepts up to bytes.size() bytes, returns the count taken.
  virtual size_t send(std::span<const uint8_t> bytes) = 0;
  // Non-blocking: returns the count read into out (0 = nothing available).
  virtual size_t recv(std::span<uint8_t> out) = 0;
  // Sender-side session clock, consulted by simulated stall windows.
  virtual void advance_to(uint64_t now_us) { (void)now_us; }
  virtual void close_send() = 0;
  // True once the peer closed its send side and everything was drained.
  virtual bool recv_closed() = 0;
};

// Simulated outage of one loopback direction: send() accepts nothing while
// begin_us <= now < end_us.
struct StallWindow {
  uint64_t begin_us = 0;
  uint64_t end_us = 0;
};

struct LoopbackChannel {
  std::mutex mu;
  std::vector<uint8_t> data;
  size_t read_pos = 0;
  bool closed = false;
};

class LoopbackEndpoint final : public ByteStream {
 public:
  LoopbackEndpoint(std::shared_ptr<LoopbackChannel> tx,
                   std::shared_ptr<LoopbackChannel> rx, StallWindow stall)
      : tx_(std::move(tx)), rx_(std::move(rx)), stall_(stall) {}

  size_t send(std::span<const uint8_t> bytes) override;
  size_t recv(std::span<uint8_t> out) override;
  void advance_to(uint64_t now_us) override { now_us_ = now_us; }
  void close_send() override;
  bool recv_closed() override;

 private:
  std::shared_ptr<LoopbackChannel> tx_;
  std::shared_ptr<LoopbackChannel> rx_;
  StallWindow stall_;
  uint64_t now_us_ = 0;
};

// Returns {a, b}; a->send feeds b->recv and vice versa. stall_a applies to
// a's send direction.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>>
make_loopback_pair(StallWindow stall_a = {}, StallWindow stall_b = {});

// Non-blocking TCP endpoint. Throws std::runtime_error on socket errors.
class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(int fd);
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  static std::unique_ptr<TcpStream> connect(const std::string& host, int port);

  size_t send(std::span<const uint8_t> bytes) override;
  size_t recv(std::span<uint8_t> out) override;
  void close_send() override;
  bool recv_closed() override;

 private:
  int fd_;
  bool eof_ = false;
};

class TcpListener {
 public:
  explicit TcpListener(const std::string& host, int port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }
  std::unique_ptr<TcpStream> accept_one();  // blocking

 private:
  int fd_;
  int port_;
};

// "host:port" -> pair; throws on malformed input.
std::pair<std::string, int> parse_addr(const std::string& addr);

}  // namespace edgebot::net
