#include "edgebot/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace edgebot::net {

size_t LoopbackEndpoint::send(std::span<const uint8_t> bytes) {
  if (now_us_ >= stall_.begin_us && now_us_ < stall_.end_us) {
    return 0;
  }
  std::lock_guard<std::mutex> lock(tx_->mu);
  if (tx_->closed) {
    throw std::runtime_error("loopback: send after close");
  }
  tx_->data.insert(tx_->data.end(), bytes.begin(), bytes.end());
  return bytes.size();
}

size_t LoopbackEndpoint::recv(std::span<uint8_t> out) {
  std::lock_guard<std::mutex> lock(rx_->mu);
  const size_t avail = rx_->data.size() - rx_->read_pos;
  const size_t n = std::min(avail, out.size());
  std::memcpy(out.data(), rx_->data.data() + rx_->read_pos, n);
  rx_->read_pos += n;
  if (rx_->read_pos == rx_->data.size() && rx_->read_pos > 0) {
    rx_->data.clear();
    rx_->read_pos = 0;
  }
  return n;
}

void LoopbackEndpoint::close_send() {
  std::lock_guard<std::mutex> lock(tx_->mu);
  tx_->closed = true;
}

bool LoopbackEndpoint::recv_closed() {
  std::lock_guard<std::mutex> lock(rx_->mu);
  return rx_->closed && rx_->read_pos == rx_->data.size();
}

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>>
make_loopback_pair(StallWindow stall_a, StallWindow stall_b) {
  auto ab = std::make_shared<LoopbackChannel>();
  auto ba = std::make_shared<LoopbackChannel>();
  return {std::make_unique<LoopbackEndpoint>(ab, ba, stall_a),
          std::make_unique<LoopbackEndpoint>(ba, ab, stall_b)};
}

namespace {

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw std::runtime_error("fcntl(O_NONBLOCK) failed");
  }
}

sockaddr_in make_sockaddr(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("bad IPv4 address: " + host);
  }
  return addr;
}

}  // namespace

TcpStream::TcpStream(int fd) : fd_(fd) {
  set_nonblocking(fd_);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpStream> TcpStream::connect(const std::string& host,
                                              int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  const sockaddr_in addr = make_sockaddr(host, port);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) <
      0) {
    ::close(fd);
    throw std::runtime_error("connect to " + host + " failed: " +
                             std::strerror(errno));
  }
  return std::make_unique<TcpStream>(fd);
}

size_t TcpStream::send(std::span<const uint8_t> bytes) {
  const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return 0;
    throw std::runtime_error(std::string("send failed: ") +
                             std::strerror(errno));
  }
  return static_cast<size_t>(n);
}

size_t TcpStream::recv(std::span<uint8_t> out) {
  const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) return 0;
    throw std::runtime_error(std::string("recv failed: ") +
                             std::strerror(errno));
  }
  if (n == 0) {
    eof_ = true;
    return 0;
  }
  return static_cast<size_t>(n);
}

void TcpStream::close_send() { ::shutdown(fd_, SHUT_WR); }

bool TcpStream::recv_closed() { return eof_; }

TcpListener::TcpListener(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_sockaddr(host, port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    throw std::runtime_error(std::string("bind failed: ") +
                             std::strerror(errno));
  }
  if (::listen(fd_, 1) < 0) {
    ::close(fd_);
    throw std::runtime_error("listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpStream> TcpListener::accept_one() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw std::runtime_error("accept failed");
  return std::make_unique<TcpStream>(fd);
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw std::invalid_argument("address must be host:port, got: " + addr);
  }
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

}  // namespace edgebot::net
