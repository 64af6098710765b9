#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "survey/error.hpp"
#include "survey/grid.hpp"
#include "survey/radio_map.hpp"

namespace survey {

/// Observation plane and mask plane sent to an external estimator.
/// Mask entries: 1 measured, 0 unobserved, -1 building.
struct EstimateRequest {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> y_matrix;
  std::vector<int> mask;

  friend bool operator==(const EstimateRequest&, const EstimateRequest&) = default;
};

struct EstimateResponse {
  std::vector<double> mean_map;
  std::vector<double> uncertainty_map;

  friend bool operator==(const EstimateResponse&, const EstimateResponse&) = default;
};

void validate(const EstimateRequest& req);
/// Throws BridgeContractError on size mismatch, non-finite or negative uncertainty.
void validate(const EstimateResponse& resp, const EstimateRequest& req);

/// Averages the values assigned to each nearest grid point (ties to the lower
/// flat index). Building points get value 0 and mask -1.
EstimateRequest build_observation_planes(std::span<const Position2> locations,
                                         std::span<const double> values,
                                         const GridGeometry& grid);

class BridgeError : public Error {
 public:
  using Error::Error;
};
class BridgeConnectionError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class BridgeTimeoutError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class BridgeFrameError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class BridgeContractError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
/// The server answered with an error frame.
class BridgeRemoteError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

/// JSON bodies, without the length prefix.
std::string encode_request(const EstimateRequest& req);
std::string encode_response(const EstimateResponse& resp);
std::string encode_error(const std::string& message);
EstimateRequest decode_request(const std::string& body);
EstimateResponse decode_response(const std::string& body);

/// 4-byte big-endian length followed by the body.
std::string frame(const std::string& body);
/// Splits one complete frame off the front of `buffer`; false if incomplete.
bool unframe(std::string& buffer, std::string& body);

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses "host:port".
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& endpoint);

/// One TCP connection, one request in flight. Not shareable across threads.
class BridgeClient {
 public:
  explicit BridgeClient(Endpoint endpoint,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~BridgeClient();
  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  EstimateResponse request_estimate(const EstimateRequest& req);

 private:
  void connect();
  void send_all(const std::string& data);
  std::string receive_frame();
  void close();

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
};

/// Loopback estimator server for tests and offline runs. Answers every
/// estimate_request with handler(req) and malformed frames with error frames.
class StubEstimatorServer {
 public:
  using Handler = std::function<EstimateResponse(const EstimateRequest&)>;

  explicit StubEstimatorServer(Handler handler, std::uint16_t port = 0);
  ~StubEstimatorServer();
  StubEstimatorServer(const StubEstimatorServer&) = delete;
  StubEstimatorServer& operator=(const StubEstimatorServer&) = delete;

  Endpoint endpoint() const { return {"127.0.0.1", port_}; }
  /// Replace the reply body for every request (to inject malformed output).
  void set_raw_reply(std::string body);
  std::size_t requests_served() const { return served_.load(); }
  void stop();

 private:
  void serve();
  void handle(int fd);

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> served_{0};
  mutable std::mutex mutex_;
  std::string raw_reply_;
  std::thread thread_;
};

/// Handler returning the observation plane as mean and mask-dependent
/// uncertainty (0 measured, 1 elsewhere, 0 at buildings).
EstimateResponse echo_estimate(const EstimateRequest& req);

}  // namespace survey
