#include "qualitagger/backend.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "httplib.h"
#include "qualitagger/error.hpp"

namespace qtag::classify {

using nlohmann::json;

std::vector<double> LocalBackend::score(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(predict_score(*model_, t));
  return out;
}

std::string LocalBackend::describe() const {
  return "built-in:" + std::string(to_string(model_->quality));
}

Endpoint Endpoint::parse(std::string_view url) {
  constexpr std::string_view prefix = "http://";
  if (url.substr(0, prefix.size()) != prefix) {
    throw UsageError("backend URL must start with http://, got '" + std::string(url) + "'");
  }
  std::string_view rest = url.substr(prefix.size());
  while (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  if (rest.find('/') != std::string_view::npos) {
    throw UsageError("backend URL must not carry a path: '" + std::string(url) + "'");
  }
  Endpoint ep;
  const std::size_t colon = rest.rfind(':');
  if (colon == std::string_view::npos) {
    ep.host = std::string(rest);
  } else {
    ep.host = std::string(rest.substr(0, colon));
    const std::string_view port = rest.substr(colon + 1);
    auto res = std::from_chars(port.data(), port.data() + port.size(), ep.port);
    if (res.ec != std::errc{} || res.ptr != port.data() + port.size() || ep.port <= 0 ||
        ep.port > 65535) {
      throw UsageError("invalid port in backend URL '" + std::string(url) + "'");
    }
  }
  if (ep.host.empty()) throw UsageError("backend URL has no host: '" + std::string(url) + "'");
  return ep;
}

std::string Endpoint::url() const { return scheme + "://" + host + ":" + std::to_string(port); }

json make_predict_request(std::string_view model_name, std::span<const std::string> texts) {
  return {{"model", model_name}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
}

std::vector<double> parse_predict_response(std::string_view body, std::size_t expected) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    throw BackendError(BackendErrorKind::MalformedResponse, "response is not JSON");
  }
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
    if (j.is_object() && j.contains("error") && j["error"].is_string()) {
      throw BackendError(BackendErrorKind::HttpStatus, j["error"].get<std::string>());
    }
    throw BackendError(BackendErrorKind::MalformedResponse, "response lacks a 'scores' array");
  }
  std::vector<double> scores;
  for (const auto& s : j["scores"]) {
    if (!s.is_number()) {
      throw BackendError(BackendErrorKind::MalformedResponse, "non-numeric score");
    }
    const double v = s.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw BackendError(BackendErrorKind::MalformedResponse, "score outside [0, 1]");
    }
    scores.push_back(v);
  }
  if (scores.size() != expected) {
    throw BackendError(BackendErrorKind::LengthMismatch,
                       "expected " + std::to_string(expected) + " scores, got " +
                           std::to_string(scores.size()));
  }
  return scores;
}

namespace {

httplib::Client make_client(const Endpoint& ep) {
  httplib::Client client(ep.host, ep.port);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  return client;
}

[[noreturn]] void throw_transport(const Endpoint& ep, httplib::Error err,
                                  std::chrono::steady_clock::duration elapsed) {
  const std::string what = ep.url() + ": " + httplib::to_string(err);
  // httplib reports an expired read timeout as a plain read error.
  if (err == httplib::Error::ConnectionTimeout ||
      (err == httplib::Error::Read && elapsed >= ep.timeout * 9 / 10)) {
    throw BackendError(BackendErrorKind::Timeout, what);
  }
  if (err == httplib::Error::Read) throw BackendError(BackendErrorKind::MalformedResponse, what);
  throw BackendError(BackendErrorKind::Unreachable, what);
}

std::string error_message(const std::string& body) {
  try {
    json j = json::parse(body);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) {
      return j["error"].get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return body;
}

}  // namespace

std::vector<double> remote_predict(const Endpoint& endpoint, std::string_view model_name,
                                   std::span<const std::string> texts) {
  if (texts.empty()) return {};
  auto client = make_client(endpoint);
  const std::string body = make_predict_request(model_name, texts).dump();
  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post("/v1/predict", body, "application/json");
  if (!res) throw_transport(endpoint, res.error(), std::chrono::steady_clock::now() - started);
  if (res->status != 200) {
    throw BackendError(BackendErrorKind::HttpStatus,
                       "HTTP " + std::to_string(res->status) + ": " + error_message(res->body));
  }
  return parse_predict_response(res->body, texts.size());
}

HealthInfo remote_health(const Endpoint& endpoint) {
  auto client = make_client(endpoint);
  const auto started = std::chrono::steady_clock::now();
  auto res = client.Get("/v1/health");
  if (!res) throw_transport(endpoint, res.error(), std::chrono::steady_clock::now() - started);
  if (res->status != 200) {
    throw BackendError(BackendErrorKind::HttpStatus, "HTTP " + std::to_string(res->status));
  }
  try {
    json j = json::parse(res->body);
    return {j.at("status").get<std::string>(), j.at("models").get<std::vector<std::string>>()};
  } catch (const json::exception&) {
    throw BackendError(BackendErrorKind::MalformedResponse, "bad health response");
  }
}

std::vector<double> stream_predict(std::istream& from_server, std::ostream& to_server,
                                   std::string_view model_name,
                                   std::span<const std::string> texts) {
  if (texts.empty()) return {};
  to_server << make_predict_request(model_name, texts).dump() << '\n';
  to_server.flush();
  if (!to_server) throw BackendError(BackendErrorKind::Unreachable, "cannot write request");
  std::string line;
  if (!std::getline(from_server, line)) {
    throw BackendError(BackendErrorKind::Unreachable, "backend closed the stream");
  }
  return parse_predict_response(line, texts.size());
}

std::vector<double> RemoteBackend::score(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += kMaxRequestTexts) {
    const auto chunk = texts.subspan(start, std::min(kMaxRequestTexts, texts.size() - start));
    const auto scores = remote_predict(endpoint_, model_name_, chunk);
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::string RemoteBackend::describe() const { return endpoint_.url() + "/" + model_name_; }

void PredictService::add(std::string name, std::shared_ptr<const ScoringBackend> backend) {
  models_.insert_or_assign(std::move(name), std::move(backend));
}

json PredictService::health() const {
  std::vector<std::string> names;
  for (const auto& [name, b] : models_) names.push_back(name);
  return {{"status", "ok"}, {"models", names}};
}

std::pair<int, json> PredictService::predict(std::string_view request_body) const {
  auto bad = [](std::string msg) { return std::make_pair(400, json{{"error", std::move(msg)}}); };
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::exception&) {
    return bad("request body is not JSON");
  }
  if (!req.is_object() || !req.contains("model") || !req["model"].is_string() ||
      !req.contains("texts") || !req["texts"].is_array()) {
    return bad("request must be {\"model\": string, \"texts\": [string...]}");
  }
  std::vector<std::string> texts;
  for (const auto& t : req["texts"]) {
    if (!t.is_string()) return bad("texts must be strings");
    texts.push_back(t.get<std::string>());
  }
  const std::string name = req["model"].get<std::string>();
  auto it = models_.find(name);
  if (it == models_.end()) return bad("unknown model '" + name + "'");
  try {
    return {200, json{{"scores", it->second->score(texts)}}};
  } catch (const std::exception& e) {
    return {500, json{{"error", e.what()}}};
  }
}

void PredictService::serve_stream(std::istream& in, std::ostream& out) const {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << predict(line).second.dump() << '\n';
    out.flush();
  }
}

}  // namespace qtag::classify
