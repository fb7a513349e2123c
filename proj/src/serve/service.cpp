#include "touchdigits/serve/service.hpp"

#include <algorithm>
#include <cmath>

#include "httplib.h"
#include "touchdigits/models/models.hpp"
#include "touchdigits/preprocess/features.hpp"
#include "touchdigits/preprocess/spline.hpp"

namespace touchdigits::serve {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxBodyBytes = 4 * 1024 * 1024;

[[noreturn]] void invalid(const std::string& message) { throw RequestError(400, "invalid_request", message); }

double number(const json& p, const char* field, const std::string& where) {
  if (!p.contains(field)) invalid(where + " is missing '" + field + "'");
  const json& v = p[field];
  if (!v.is_number() || !std::isfinite(v.get<double>())) invalid(where + "." + field + " must be a finite number");
  return v.get<double>();
}

std::size_t distinct_points(const std::vector<preprocess::Stroke>& strokes) {
  std::vector<std::pair<double, double>> seen;
  for (const auto& s : strokes) {
    for (const auto& p : s.points) {
      if (std::find(seen.begin(), seen.end(), std::pair{p.x, p.y}) == seen.end()) seen.emplace_back(p.x, p.y);
      if (seen.size() > 1) return seen.size();
    }
  }
  return seen.size();
}

json error_body(const std::string& code, const std::string& message) {
  return {{"code", code}, {"message", message}};
}

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  res.set_content(reply.body.dump(), "application/json");
}

}  // namespace

InferRequest parse_infer_request(const json& body) {
  if (!body.is_object()) invalid("request body must be a JSON object");
  InferRequest req;
  if (!body.contains("model") || !body["model"].is_string()) invalid("'model' must be a string");
  req.model = body["model"].get<std::string>();
  if (body.contains("partial")) {
    if (!body["partial"].is_boolean()) invalid("'partial' must be a boolean");
    req.partial = body["partial"].get<bool>();
  }
  if (!body.contains("strokes") || !body["strokes"].is_array()) invalid("'strokes' must be an array of strokes");
  const json& strokes = body["strokes"];
  if (strokes.empty()) throw RequestError(400, "empty_input", "no strokes in request");
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const std::string where = "strokes[" + std::to_string(s) + "]";
    if (!strokes[s].is_array()) invalid(where + " must be an array of points");
    if (strokes[s].empty()) throw RequestError(400, "empty_input", where + " has no points");
    preprocess::Stroke stroke;
    double last_t = -INFINITY;
    for (std::size_t i = 0; i < strokes[s].size(); ++i) {
      const json& p = strokes[s][i];
      const std::string pw = where + "[" + std::to_string(i) + "]";
      if (!p.is_object()) invalid(pw + " must be an object {x, y, t}");
      preprocess::TouchPoint tp{number(p, "x", pw), number(p, "y", pw), number(p, "t", pw)};
      if (tp.t < last_t) invalid(pw + ".t goes backwards");
      last_t = tp.t;
      stroke.points.push_back(tp);
    }
    req.strokes.push_back(std::move(stroke));
  }
  return req;
}

json to_json(const InferRequest& request) {
  json strokes = json::array();
  for (const auto& s : request.strokes) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({{"x", p.x}, {"y", p.y}, {"t", p.t}});
    strokes.push_back(std::move(pts));
  }
  return {{"model", request.model}, {"strokes", std::move(strokes)}, {"partial", request.partial}};
}

json to_json(const InferResponse& response) {
  return {{"model", response.model},
          {"probabilities", response.probabilities},
          {"top", response.top},
          {"completion_hint", response.completion_hint},
          {"partial", response.partial}};
}

void ModelRegistry::add(nn::Checkpoint checkpoint) {
  const std::string name = checkpoint.spec.name;
  if (models_.count(name)) throw InvalidArgument("a checkpoint for model '" + name + "' is already loaded");
  const auto report = models::audit(checkpoint.spec);
  if (!report.passed) throw InvalidArgument("checkpoint for '" + name + "' fails the audit: " + report.failure);
  auto network = std::make_shared<const nn::Network<float>>(nn::make_network(checkpoint));
  models_.emplace(name, Entry{std::move(checkpoint), std::move(network)});
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : models_) out.push_back(name);
  return out;
}

json ModelRegistry::describe() const {
  json out = json::array();
  for (const auto& [name, e] : models_) {
    out.push_back({{"name", name},
                   {"input_mode", e.checkpoint.spec.input_mode},
                   {"parameters", nn::count_parameters(e.checkpoint.spec)}});
  }
  return out;
}

InferResponse ModelRegistry::infer(const InferRequest& request) const {
  const auto it = models_.find(request.model);
  if (it == models_.end()) {
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw RequestError(404, "unknown_model", "model '" + request.model + "' is not loaded (loaded: " + known + ")");
  }
  const Entry& entry = it->second;
  if (request.strokes.empty()) throw RequestError(400, "empty_input", "no strokes in request");
  if (distinct_points(request.strokes) < 2) {
    throw RequestError(422, "insufficient_input", "input has fewer than two distinct points");
  }

  preprocess::Glyph glyph;
  glyph.strokes = request.strokes;
  nn::Tensor<float> x;
  try {
    x = preprocess::encode_for_model(glyph, entry.checkpoint.spec, entry.checkpoint.normalization, false);
  } catch (const InvalidArgument& e) {
    throw RequestError(422, "insufficient_input", std::string("longest stroke carries no direction: ") + e.what());
  }
  nn::Shape shape{1};
  shape.insert(shape.end(), x.shape().begin(), x.shape().end());
  const auto probs = entry.network->predict(nn::Tensor<float>(shape, x.storage()));

  InferResponse out;
  out.model = request.model;
  out.partial = request.partial;
  double sum = 0.0;
  for (std::size_t c = 0; c < 10; ++c) sum += probs.data()[c];
  if (!(sum > 0.0) || !std::isfinite(sum)) throw NumericError("model produced non-finite probabilities");
  for (std::size_t c = 0; c < 10; ++c) out.probabilities[c] = probs.data()[c] / sum;
  out.top = static_cast<int>(std::max_element(out.probabilities.begin(), out.probabilities.end()) -
                             out.probabilities.begin());
  const double median = entry.checkpoint.class_median_arclength[static_cast<std::size_t>(out.top)];
  out.completion_hint = median > 0.0 ? std::min(1.0, preprocess::arclength(glyph) / median) : 0.0;
  return out;
}

Service::Service(ModelRegistry registry, ServiceOptions options)
    : registry_(std::move(registry)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (registry_.empty()) throw InvalidArgument("no models loaded");
  auto& s = *server_;
  s.set_payload_max_length(kMaxBodyBytes);
  // No SO_REUSEPORT: a second server on a busy port must fail, not share it.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  s.Post("/api/infer",
         [this](const httplib::Request& req, httplib::Response& res) { send(res, handle_infer(req.body)); });
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  if (options_.static_dir) {
    if (!std::filesystem::is_directory(*options_.static_dir)) {
      throw IoError("static directory " + options_.static_dir->string() + " does not exist");
    }
    s.set_mount_point("/", options_.static_dir->string());
  }
}

Service::~Service() { stop(); }

HttpReply Service::health() const {
  return {200, {{"status", "ok"}, {"models", registry_.describe()}, {"version", kVersion}}};
}

HttpReply Service::handle_infer(const std::string& body) const {
  try {
    const json doc = json::parse(body);
    return {200, to_json(registry_.infer(parse_infer_request(doc)))};
  } catch (const json::parse_error& e) {
    return {400, error_body("invalid_json", std::string("body is not valid JSON: ") + e.what())};
  } catch (const RequestError& e) {
    return {e.status(), error_body(e.code(), e.what())};
  } catch (const Error& e) {
    return {500, error_body(e.code(), e.what())};
  }
}

void Service::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  run();
}

int Service::bind_any(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw IoError("cannot bind any port on " + host);
  return port;
}

void Service::run() { server_->listen_after_bind(); }

void Service::wait_until_ready() const { server_->wait_until_ready(); }

void Service::stop() {
  if (server_) server_->stop();
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) throw InvalidArgument("bind address must be host:port, got '" + bind + "'");
  const std::string host = bind.substr(0, colon);
  const std::string port_text = bind.substr(colon + 1);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = 0;
  } catch (const std::exception&) {
    port = 0;
  }
  if (port < 1 || port > 65535) throw InvalidArgument("bind port must be 1-65535, got '" + port_text + "'");
  return {host, port};
}

}  // namespace touchdigits::serve
