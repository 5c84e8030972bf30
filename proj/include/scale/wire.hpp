#pragma once

// Framed single-round protocol between clients and the cloud.
//
// Frame: u32 big-endian payload length, one type byte, payload. The length
// counts payload bytes only.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "scale/bytes.hpp"
#include "scale/cloud_store.hpp"
#include "scale/error.hpp"
#include "scale/types.hpp"

namespace scale::wire {

inline constexpr std::uint32_t kDefaultMaxFrame = 1u << 28;

enum class MsgType : std::uint8_t {
  upload = 0x01,
  query = 0x02,
  result = 0x03,
  insert = 0x04,
  del = 0x05,
  ok = 0x06,
  err = 0x07,
};

const char* msg_type_name(MsgType t);

struct Frame {
  MsgType type = MsgType::ok;
  Bytes payload;
};

Frame make_err(ErrorCode code, const std::string& reason);
// Decodes an ERR payload into (code, reason).
std::pair<ErrorCode, std::string> parse_err(ByteView payload);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(const Frame& f) = 0;
  // Throws ErrorCode::transport on EOF or I/O failure.
  virtual Frame recv() = 0;
};

// Blocking transport over a connected stream socket. Owns the descriptor.
class SocketTransport : public Transport {
 public:
  explicit SocketTransport(int fd, std::uint32_t max_frame = kDefaultMaxFrame);
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  static std::unique_ptr<SocketTransport> connect(
      const std::string& host, std::uint16_t port,
      std::uint32_t max_frame = kDefaultMaxFrame);

  void send(const Frame& f) override;
  Frame recv() override;
  // Unblocks a pending recv from another thread.
  void shutdown();
  int fd() const { return fd_; }

 private:
  int fd_;
  std::uint32_t max_frame_;
};

// Counts frames and bytes passing through another transport.
class CountingTransport : public Transport {
 public:
  explicit CountingTransport(Transport& inner) : inner_(inner) {}
  void send(const Frame& f) override;
  Frame recv() override;

  std::uint64_t frames_sent() const { return frames_sent_; }
  std::uint64_t frames_received() const { return frames_received_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  void reset();

 private:
  Transport& inner_;
  std::uint64_t frames_sent_ = 0, frames_received_ = 0;
  std::uint64_t bytes_sent_ = 0, bytes_received_ = 0;
};

// Request dispatch shared by the network server and in-process use. The
// database pointer is swapped on UPLOAD; queries keep the instance they
// started on alive.
class Service {
 public:
  Service() = default;
  explicit Service(std::unique_ptr<CloudDatabase> db,
                   IndexVariant variant = IndexVariant::avl);

  // Exactly one response frame per request. Errors become ERR frames.
  Frame handle(const Frame& request);

  std::shared_ptr<CloudDatabase> database() const;
  IndexVariant variant() const { return variant_; }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<CloudDatabase> db_;
  IndexVariant variant_ = IndexVariant::avl;
};

// Thread-per-connection TCP server.
class Server {
 public:
  Server(Service& service, std::uint32_t max_frame = kDefaultMaxFrame)
      : service_(service), max_frame_(max_frame) {}
  ~Server();

  // Binds and listens; port 0 picks a free port.
  void listen(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  // Accept loop on a background thread.
  void start();
  // Accept loop on the calling thread until stop().
  void run();
  void stop();

 private:
  void serve_connection(std::shared_ptr<SocketTransport> conn);

  Service& service_;
  std::uint32_t max_frame_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::vector<std::weak_ptr<SocketTransport>> conns_;
  std::vector<std::thread> workers_;
};

// Client verbs. Every call sends one frame and reads one frame; ERR
// responses are rethrown as Error with the server's code.
class Client {
 public:
  explicit Client(Transport& t) : t_(t) {}

  void upload(const UploadBundle& b);
  std::vector<ResultEntry> query(const EncryptedQuery& q);
  void insert(const InsertBundle& b);
  void remove(const DeleteRequest& r);

 private:
  Frame round_trip(const Frame& request, MsgType expect);
  Transport& t_;
};

// "host:port" with a numeric port.
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

}  // namespace scale::wire
