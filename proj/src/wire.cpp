#include "scale/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "scale/codec.hpp"
#include "scale/query_engine.hpp"

namespace scale::wire {
namespace {

bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x07; }

[[noreturn]] void sys_fail(const std::string& what) {
  fail(ErrorCode::transport, what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

// False on clean EOF before the first byte.
bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t k = ::recv(fd, p + got, n - got, 0);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    if (k == 0) {
      if (got == 0) return false;
      fail(ErrorCode::transport, "connection closed mid-frame");
    }
    got += static_cast<std::size_t>(k);
  }
  return true;
}

bool closes_connection(ErrorCode c) {
  return c == ErrorCode::protocol || c == ErrorCode::format;
}

}  // namespace

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::upload: return "UPLOAD";
    case MsgType::query: return "QUERY";
    case MsgType::result: return "RESULT";
    case MsgType::insert: return "INSERT";
    case MsgType::del: return "DELETE";
    case MsgType::ok: return "OK";
    case MsgType::err: return "ERR";
  }
  return "UNKNOWN";
}

Frame make_err(ErrorCode code, const std::string& reason) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(code));
  w.str(reason);
  return Frame{MsgType::err, w.take()};
}

std::pair<ErrorCode, std::string> parse_err(ByteView payload) {
  ByteReader r(payload);
  auto code = static_cast<ErrorCode>(r.u16());
  std::string reason = r.str();
  r.expect_done("ERR frame");
  return {code, reason};
}

SocketTransport::SocketTransport(int fd, std::uint32_t max_frame)
    : fd_(fd), max_frame_(max_frame) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

SocketTransport::~SocketTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SocketTransport> SocketTransport::connect(
    const std::string& host, std::uint16_t port, std::uint32_t max_frame) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints,
                         &res);
  if (rc != 0) {
    fail(ErrorCode::transport,
         "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    fail(ErrorCode::transport,
         "cannot connect to " + host + ":" + std::to_string(port));
  }
  return std::make_unique<SocketTransport>(fd, max_frame);
}

void SocketTransport::send(const Frame& f) {
  if (f.payload.size() > max_frame_) {
    fail(ErrorCode::protocol, "frame of " + std::to_string(f.payload.size()) +
                                  " bytes exceeds the cap");
  }
  std::uint8_t head[5];
  put_be32(head, static_cast<std::uint32_t>(f.payload.size()));
  head[4] = static_cast<std::uint8_t>(f.type);
  write_all(fd_, head, sizeof(head));
  write_all(fd_, f.payload.data(), f.payload.size());
}

Frame SocketTransport::recv() {
  std::uint8_t head[5];
  if (!read_all(fd_, head, sizeof(head))) {
    fail(ErrorCode::transport, "connection closed");
  }
  std::uint32_t len = get_be32(head);
  if (len > max_frame_) {
    fail(ErrorCode::protocol,
         "frame of " + std::to_string(len) + " bytes exceeds the cap");
  }
  if (!known_type(head[4])) {
    fail(ErrorCode::protocol,
         "unknown message type " + std::to_string(head[4]));
  }
  Frame f{static_cast<MsgType>(head[4]), Bytes(len)};
  if (len > 0 && !read_all(fd_, f.payload.data(), len)) {
    fail(ErrorCode::transport, "connection closed mid-frame");
  }
  return f;
}

void SocketTransport::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

void CountingTransport::send(const Frame& f) {
  inner_.send(f);
  ++frames_sent_;
  bytes_sent_ += 5 + f.payload.size();
}

Frame CountingTransport::recv() {
  Frame f = inner_.recv();
  ++frames_received_;
  bytes_received_ += 5 + f.payload.size();
  return f;
}

void CountingTransport::reset() {
  frames_sent_ = frames_received_ = bytes_sent_ = bytes_received_ = 0;
}

Service::Service(std::unique_ptr<CloudDatabase> db, IndexVariant variant)
    : db_(std::move(db)), variant_(variant) {}

std::shared_ptr<CloudDatabase> Service::database() const {
  std::lock_guard<std::mutex> lock(mu_);
  return db_;
}

Frame Service::handle(const Frame& request) {
  try {
    switch (request.type) {
      case MsgType::upload: {
        auto db = CloudDatabase::ingest(codec::decode_upload(request.payload),
                                        variant_);
        std::lock_guard<std::mutex> lock(mu_);
        db_ = std::move(db);
        return Frame{MsgType::ok, {}};
      }
      case MsgType::query: {
        EncryptedQuery q = codec::decode_query(request.payload);
        auto db = database();
        std::vector<ResultEntry> res;
        if (db != nullptr) res = secure_skyline(*db, q);
        return Frame{MsgType::result, codec::encode_results(res)};
      }
      case MsgType::insert: {
        InsertBundle b = codec::decode_insert(request.payload);
        auto db = database();
        if (db == nullptr) {
          fail(ErrorCode::inconsistent_bundle, "insert before upload");
        }
        db->apply_insert(std::move(b));
        return Frame{MsgType::ok, {}};
      }
      case MsgType::del: {
        DeleteRequest r = codec::decode_delete(request.payload);
        auto db = database();
        if (db == nullptr) {
          fail(ErrorCode::unknown_id,
               "unknown record " + std::to_string(r.record_id));
        }
        db->apply_delete(r);
        return Frame{MsgType::ok, {}};
      }
      default:
        fail(ErrorCode::protocol, std::string("unexpected request type ") +
                                      msg_type_name(request.type));
    }
  } catch (const Error& e) {
    return make_err(e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return make_err(ErrorCode::internal, "out of memory");
  }
}

Server::~Server() { stop(); }

void Server::listen(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(),
                         std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) {
    fail(ErrorCode::transport, "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    sys_fail("socket");
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    int saved = errno;
    ::close(fd);
    ::freeaddrinfo(res);
    errno = saved;
    sys_fail("bind " + host + ":" + std::to_string(port));
  }
  ::freeaddrinfo(res);
  sockaddr_storage addr{};
  socklen_t alen = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &alen);
  port_ = addr.ss_family == AF_INET6
              ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
              : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
}

void Server::start() {
  acceptor_ = std::thread([this] { run(); });
}

void Server::run() {
  if (listen_fd_ < 0) fail(ErrorCode::transport, "server is not listening");
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (stopping_) break;
      sys_fail("accept");
    }
    auto conn = std::make_shared<SocketTransport>(fd, max_frame_);
    std::lock_guard<std::mutex> lock(conns_mu_);
    if (stopping_) break;
    conns_.push_back(conn);
    workers_.emplace_back([this, conn] { serve_connection(conn); });
  }
}

void Server::serve_connection(std::shared_ptr<SocketTransport> conn) {
  for (;;) {
    Frame request;
    try {
      request = conn->recv();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::protocol) {
        try {
          conn->send(make_err(e.code(), e.what()));
        } catch (const Error&) {
        }
      }
      return;
    }
    Frame response = service_.handle(request);
    bool close_after = false;
    if (response.type == MsgType::err) {
      close_after = closes_connection(parse_err(response.payload).first);
    }
    try {
      conn->send(response);
    } catch (const Error&) {
      return;
    }
    if (close_after) return;
  }
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(conns_mu_);
    for (auto& w : conns_) {
      if (auto c = w.lock()) c->shutdown();
    }
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

Frame Client::round_trip(const Frame& request, MsgType expect) {
  t_.send(request);
  Frame resp = t_.recv();
  if (resp.type == MsgType::err) {
    auto [code, reason] = parse_err(resp.payload);
    throw Error(code, "server: " + reason);
  }
  if (resp.type != expect) {
    fail(ErrorCode::protocol, std::string("expected ") + msg_type_name(expect) +
                                  ", got " + msg_type_name(resp.type));
  }
  return resp;
}

void Client::upload(const UploadBundle& b) {
  round_trip(Frame{MsgType::upload, codec::encode_upload(b)}, MsgType::ok);
}

std::vector<ResultEntry> Client::query(const EncryptedQuery& q) {
  Frame resp =
      round_trip(Frame{MsgType::query, codec::encode_query(q)}, MsgType::result);
  return codec::decode_results(resp.payload);
}

void Client::insert(const InsertBundle& b) {
  round_trip(Frame{MsgType::insert, codec::encode_insert(b)}, MsgType::ok);
}

void Client::remove(const DeleteRequest& r) {
  round_trip(Frame{MsgType::del, codec::encode_delete(r)}, MsgType::ok);
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 == addr.size()) {
    fail(ErrorCode::parameter, "address must be host:port, got '" + addr + "'");
  }
  std::string host = addr.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    fail(ErrorCode::parameter, "bad port in '" + addr + "'");
  }
  if (port > 65535) fail(ErrorCode::parameter, "port out of range");
  return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace scale::wire
