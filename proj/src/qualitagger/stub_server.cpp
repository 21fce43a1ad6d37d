#include "qualitagger/stub_server.hpp"

#include "httplib.h"
#include "qualitagger/error.hpp"

namespace qtag::classify {

PredictService load_model_service(const std::filesystem::path& model_dir) {
  if (!std::filesystem::is_directory(model_dir)) {
    throw IoError("model directory '" + model_dir.string() + "' does not exist");
  }
  PredictService service;
  for (Quality q : kAllQualities) {
    const auto path = model_dir / (std::string(to_string(q)) + ".qtag");
    if (!std::filesystem::exists(path)) continue;
    auto model = std::make_shared<const BinaryModel>(load_binary_model(path));
    service.add(std::string(to_string(q)), std::make_shared<LocalBackend>(std::move(model)));
  }
  if (service.empty()) {
    throw DataError("no <quality>.qtag models found in '" + model_dir.string() + "'");
  }
  return service;
}

struct StubServer::Impl {
  PredictService service;
  httplib::Server server;
  std::thread worker;
  bool bound = false;
};

StubServer::StubServer(PredictService service) : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& svc = impl_->service;
  impl_->server.Get("/v1/health", [&svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(svc.health().dump(), "application/json");
  });
  impl_->server.Post("/v1/predict", [&svc](const httplib::Request& req, httplib::Response& res) {
    auto [status, body] = svc.predict(req.body);
    res.status = status;
    res.set_content(body.dump(), "application/json");
  });
}

StubServer::~StubServer() { stop(); }

int StubServer::bind(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port <= 0) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound_port;
}

void StubServer::start() {
  if (!impl_->bound) throw UsageError("StubServer::start called before bind");
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void StubServer::run() {
  if (!impl_->bound) throw UsageError("StubServer::run called before bind");
  impl_->server.listen_after_bind();
}

void StubServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace qtag::classify
