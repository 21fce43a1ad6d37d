#pragma once

#include <chrono>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qualitagger/binary_model.hpp"

namespace qtag::classify {

// Anything that turns texts into positive-class scores in [0, 1].
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  // Exactly texts.size() scores, order-aligned. Throws BackendError on
  // transport or protocol failures.
  virtual std::vector<double> score(std::span<const std::string> texts) const = 0;
  virtual std::string describe() const = 0;
};

class LocalBackend final : public ScoringBackend {
 public:
  explicit LocalBackend(std::shared_ptr<const BinaryModel> model) : model_(std::move(model)) {}
  std::vector<double> score(std::span<const std::string> texts) const override;
  std::string describe() const override;
  const BinaryModel& model() const { return *model_; }

 private:
  std::shared_ptr<const BinaryModel> model_;
};

struct Endpoint {
  std::string scheme = "http";
  std::string host;
  int port = 80;
  std::chrono::milliseconds timeout{10000};

  // "http://host[:port][/]". Throws UsageError on anything else.
  static Endpoint parse(std::string_view url);
  std::string url() const;
};

// Wire protocol, shared by client and server.
nlohmann::json make_predict_request(std::string_view model_name,
                                    std::span<const std::string> texts);
// Validates {"scores": [...]} against the expected count and [0, 1] range.
std::vector<double> parse_predict_response(std::string_view body, std::size_t expected);

// POST /v1/predict. An empty text list returns immediately without a request.
std::vector<double> remote_predict(const Endpoint& endpoint, std::string_view model_name,
                                   std::span<const std::string> texts);

struct HealthInfo {
  std::string status;
  std::vector<std::string> models;
};

// GET /v1/health.
HealthInfo remote_health(const Endpoint& endpoint);

// Offline transport: one request object per line written to `to_server`, one
// response object per line read from `from_server`.
std::vector<double> stream_predict(std::istream& from_server, std::ostream& to_server,
                                   std::string_view model_name,
                                   std::span<const std::string> texts);

// Texts per request; larger batches are split.
inline constexpr std::size_t kMaxRequestTexts = 256;

class RemoteBackend final : public ScoringBackend {
 public:
  RemoteBackend(Endpoint endpoint, std::string model_name)
      : endpoint_(std::move(endpoint)), model_name_(std::move(model_name)) {}
  std::vector<double> score(std::span<const std::string> texts) const override;
  std::string describe() const override;

 private:
  Endpoint endpoint_;
  std::string model_name_;
};

// Server half of the protocol over a fixed set of named backends. Transport
// agnostic: the HTTP stub server and the stdio loop both delegate here.
class PredictService {
 public:
  void add(std::string name, std::shared_ptr<const ScoringBackend> backend);
  bool empty() const { return models_.empty(); }

  nlohmann::json health() const;
  // Returns (HTTP status, response body). 400 for malformed requests and
  // unknown models, with {"error": "..."}.
  std::pair<int, nlohmann::json> predict(std::string_view request_body) const;

  // Reads request lines until EOF, writing one response line each.
  void serve_stream(std::istream& in, std::ostream& out) const;

 private:
  std::map<std::string, std::shared_ptr<const ScoringBackend>, std::less<>> models_;
};

}  // namespace qtag::classify
