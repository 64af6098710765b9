#include "survey/bridge.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <json.hpp>

namespace survey {

using nlohmann::json;

void validate(const EstimateRequest& req) {
  const std::size_t n = req.rows * req.cols;
  if (req.rows == 0 || req.cols == 0) throw BridgeContractError("empty request grid");
  if (req.y_matrix.size() != n || req.mask.size() != n) {
    throw BridgeContractError("request planes do not match rows * cols");
  }
  for (int m : req.mask) {
    if (m < -1 || m > 1) throw BridgeContractError("mask values must be in {-1, 0, 1}");
  }
}

void validate(const EstimateResponse& resp, const EstimateRequest& req) {
  const std::size_t n = req.rows * req.cols;
  if (resp.mean_map.size() != n || resp.uncertainty_map.size() != n) {
    throw BridgeContractError("response shape " + std::to_string(resp.mean_map.size()) + "/" +
                              std::to_string(resp.uncertainty_map.size()) + " does not match " +
                              std::to_string(n));
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(resp.mean_map[k]) || !std::isfinite(resp.uncertainty_map[k])) {
      throw BridgeContractError("non-finite value in response at index " + std::to_string(k));
    }
    if (resp.uncertainty_map[k] < 0.0) {
      throw BridgeContractError("negative uncertainty at index " + std::to_string(k));
    }
  }
}

EstimateRequest build_observation_planes(std::span<const Position2> locations,
                                         std::span<const double> values,
                                         const GridGeometry& grid) {
  if (locations.size() != values.size()) throw ConfigError("locations and values differ in length");
  const std::size_t n = grid.size();
  EstimateRequest req;
  req.rows = grid.rows();
  req.cols = grid.cols();
  req.y_matrix.assign(n, 0.0);
  req.mask.assign(n, 0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const std::size_t k = grid.nearest(locations[i]);
    req.y_matrix[k] += values[i];
    ++count[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (grid.is_building(k)) {
      req.y_matrix[k] = 0.0;
      req.mask[k] = -1;
    } else if (count[k] > 0) {
      req.y_matrix[k] /= static_cast<double>(count[k]);
      req.mask[k] = 1;
    }
  }
  return req;
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw BridgeFrameError(std::string("malformed JSON frame: ") + e.what());
  }
}

void expect_type(const json& j, const char* type) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw BridgeFrameError("frame without a type field");
  }
  const std::string got = j["type"].get<std::string>();
  if (got == "error") {
    throw BridgeRemoteError("estimator error: " + j.value("message", std::string("unspecified")));
  }
  if (got != type) throw BridgeFrameError("unexpected frame type '" + got + "'");
}

template <typename T>
std::vector<T> field(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array()) {
    throw BridgeFrameError(std::string("missing array field '") + name + "'");
  }
  std::vector<T> out;
  out.reserve(j[name].size());
  for (const json& v : j[name]) {
    if (!v.is_number()) throw BridgeFrameError(std::string("non-numeric entry in '") + name + "'");
    out.push_back(v.get<T>());
  }
  return out;
}

}  // namespace

std::string encode_request(const EstimateRequest& req) {
  json j{{"type", "estimate_request"},
         {"rows", req.rows},
         {"cols", req.cols},
         {"y_matrix", req.y_matrix},
         {"mask", req.mask}};
  return j.dump();
}

std::string encode_response(const EstimateResponse& resp) {
  json j{{"type", "estimate_response"},
         {"mean_map", resp.mean_map},
         {"uncertainty_map", resp.uncertainty_map}};
  return j.dump();
}

std::string encode_error(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

EstimateRequest decode_request(const std::string& body) {
  const json j = parse_body(body);
  expect_type(j, "estimate_request");
  EstimateRequest req;
  try {
    req.rows = j.at("rows").get<std::size_t>();
    req.cols = j.at("cols").get<std::size_t>();
  } catch (const json::exception& e) {
    throw BridgeFrameError(std::string("bad request header: ") + e.what());
  }
  req.y_matrix = field<double>(j, "y_matrix");
  req.mask = field<int>(j, "mask");
  return req;
}

EstimateResponse decode_response(const std::string& body) {
  const json j = parse_body(body);
  expect_type(j, "estimate_response");
  return EstimateResponse{field<double>(j, "mean_map"), field<double>(j, "uncertainty_map")};
}

std::string frame(const std::string& body) {
  if (body.size() > kMaxFrameBytes) throw BridgeFrameError("frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

bool unframe(std::string& buffer, std::string& body) {
  if (buffer.size() < 4) return false;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer.data());
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                          (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  if (n > kMaxFrameBytes) throw BridgeFrameError("frame length " + std::to_string(n) + " exceeds limit");
  if (buffer.size() < 4 + std::size_t{n}) return false;
  body = buffer.substr(4, n);
  buffer.erase(0, 4 + std::size_t{n});
  return true;
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("endpoint must be host:port, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const int port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port <= 0 || port > 65535) throw std::out_of_range("");
    e.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("invalid port in endpoint '" + text + "'");
  }
  return e;
}

std::string to_string(const Endpoint& endpoint) {
  return endpoint.host + ":" + std::to_string(endpoint.port);
}

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

// Waits for `events` on fd; false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline) {
  while (true) {
    pollfd p{fd, events, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r > 0) return true;
    if (r == 0) return false;
    if (errno != EINTR) throw BridgeConnectionError(std::string("poll: ") + std::strerror(errno));
  }
}

}  // namespace

BridgeClient::BridgeClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

BridgeClient::~BridgeClient() { close(); }

void BridgeClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void BridgeClient::connect() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (const int rc = ::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw BridgeConnectionError("cannot resolve " + to_string(endpoint_) + ": " + gai_strerror(rc));
  }
  const auto deadline = Clock::now() + timeout_;
  std::string last = "no address";
  bool timed_out = false;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      if (!wait_for(fd, POLLOUT, deadline)) {
        ::close(fd);
        timed_out = true;
        continue;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
      errno = err;
    }
    if (rc == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      fd_ = fd;
      ::freeaddrinfo(res);
      return;
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (timed_out) throw BridgeTimeoutError("timed out connecting to " + to_string(endpoint_));
  throw BridgeConnectionError("cannot connect to " + to_string(endpoint_) + ": " + last);
}

void BridgeClient::send_all(const std::string& data) {
  const auto deadline = Clock::now() + timeout_;
  std::size_t sent = 0;
  while (sent < data.size()) {
    if (!wait_for(fd_, POLLOUT, deadline)) {
      close();
      throw BridgeTimeoutError("timed out sending to " + to_string(endpoint_));
    }
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      const std::string why = std::strerror(errno);
      close();
      throw BridgeConnectionError("send failed: " + why);
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string BridgeClient::receive_frame() {
  const auto deadline = Clock::now() + timeout_;
  std::string buffer;
  std::string body;
  char chunk[65536];
  while (true) {
    try {
      if (unframe(buffer, body)) break;
    } catch (const BridgeFrameError&) {
      close();
      throw;
    }
    if (!wait_for(fd_, POLLIN, deadline)) {
      close();
      throw BridgeTimeoutError("timed out waiting for " + to_string(endpoint_));
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      const std::string why = std::strerror(errno);
      close();
      throw BridgeConnectionError("receive failed: " + why);
    }
    if (n == 0) {
      close();
      if (buffer.empty()) throw BridgeConnectionError("connection closed by estimator");
      throw BridgeFrameError("connection closed inside a frame");
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
  if (!buffer.empty()) {
    close();
    throw BridgeFrameError("unexpected trailing data after response");
  }
  return body;
}

EstimateResponse BridgeClient::request_estimate(const EstimateRequest& req) {
  validate(req);
  if (fd_ < 0) connect();
  send_all(frame(encode_request(req)));
  EstimateResponse resp = decode_response(receive_frame());
  validate(resp, req);
  return resp;
}

StubEstimatorServer::StubEstimatorServer(Handler handler, std::uint16_t port)
    : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw BridgeConnectionError("cannot create stub socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw BridgeConnectionError("cannot bind stub server: " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

StubEstimatorServer::~StubEstimatorServer() { stop(); }

void StubEstimatorServer::stop() {
  if (stopping_.exchange(true)) return;
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
}

void StubEstimatorServer::set_raw_reply(std::string body) {
  std::lock_guard lock(mutex_);
  raw_reply_ = std::move(body);
}

void StubEstimatorServer::serve() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    handle(fd);
    ::close(fd);
  }
}

void StubEstimatorServer::handle(int fd) {
  std::string buffer;
  char chunk[65536];
  while (!stopping_) {
    std::string body;
    bool have = false;
    try {
      have = unframe(buffer, body);
    } catch (const BridgeFrameError& e) {
      const std::string reply = frame(encode_error(e.what()));
      ::send(fd, reply.data(), reply.size(), MSG_NOSIGNAL);
      return;
    }
    if (!have) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) return;
      buffer.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    std::string reply;
    {
      std::lock_guard lock(mutex_);
      reply = raw_reply_;
    }
    if (reply.empty()) {
      try {
        const EstimateRequest req = decode_request(body);
        validate(req);
        reply = encode_response(handler_(req));
      } catch (const std::exception& e) {
        reply = encode_error(e.what());
      }
    }
    const std::string out = frame(reply);
    ++served_;
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = ::send(fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return;
      sent += static_cast<std::size_t>(n);
    }
  }
}

EstimateResponse echo_estimate(const EstimateRequest& req) {
  EstimateResponse resp;
  resp.mean_map = req.y_matrix;
  resp.uncertainty_map.resize(req.mask.size());
  for (std::size_t k = 0; k < req.mask.size(); ++k) {
    resp.uncertainty_map[k] = req.mask[k] == 0 ? 1.0 : 0.0;
  }
  return resp;
}

}  // namespace survey
