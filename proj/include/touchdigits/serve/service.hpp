#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/nn/checkpoint.hpp"
#include "touchdigits/preprocess/glyph.hpp"
#include "touchdigits/util/error.hpp"

namespace httplib {
class Server;
}

namespace touchdigits::serve {

inline constexpr const char* kVersion = "0.1.0";

// Rejected request. `status` is the HTTP status the service answers with.
class RequestError : public Error {
 public:
  RequestError(int status, std::string code, const std::string& message)
      : Error(std::move(code), message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct InferRequest {
  std::string model;
  std::vector<preprocess::Stroke> strokes;
  bool partial = false;
};

struct InferResponse {
  std::string model;
  std::array<double, 10> probabilities{};
  int top = 0;
  double completion_hint = 0.0;
  bool partial = false;
};

// Validates the request body. Throws RequestError (400).
InferRequest parse_infer_request(const nlohmann::json& body);
nlohmann::json to_json(const InferRequest& request);
nlohmann::json to_json(const InferResponse& response);

// Loaded checkpoints keyed by model name ("bitmap2d", "polar1d").
class ModelRegistry {
 public:
  // Audits the architecture before accepting it. A second checkpoint for an
  // already registered name throws.
  void add(nn::Checkpoint checkpoint);
  std::vector<std::string> names() const;
  bool empty() const { return models_.empty(); }

  // Throws RequestError 404 for unknown names and 422 when the strokes
  // carry no direction (fewer than two distinct points).
  InferResponse infer(const InferRequest& request) const;

  nlohmann::json describe() const;

 private:
  struct Entry {
    nn::Checkpoint checkpoint;
    std::shared_ptr<const nn::Network<float>> network;
  };
  std::map<std::string, Entry> models_;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> static_dir;
};

// HTTP front end: GET /api/health, POST /api/infer and an optional static
// directory mounted at "/".
class Service {
 public:
  Service(ModelRegistry registry, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpReply health() const;
  HttpReply handle_infer(const std::string& body) const;

  // Blocks until stop(). Throws IoError when the address cannot be bound.
  void listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; call run() afterwards.
  int bind_any(const std::string& host);
  void run();
  void wait_until_ready() const;
  void stop();

 private:
  ModelRegistry registry_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

// "host:port" with port in 1-65535. Throws InvalidArgument.
std::pair<std::string, int> parse_bind(const std::string& bind);

}  // namespace touchdigits::serve
