#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "qualitagger/backend.hpp"

namespace qtag::classify {

// Built-in models found in a model directory (<quality>.qtag), registered
// under their lowercase quality names.
PredictService load_model_service(const std::filesystem::path& model_dir);

// In-process HTTP server speaking the backend wire protocol.
class StubServer {
 public:
  explicit StubServer(PredictService service);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves on a background thread; returns once the server accepts requests.
  void start();
  // Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qtag::classify
