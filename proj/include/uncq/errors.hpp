#pragma once

#include <stdexcept>
#include <string>

namespace uncq {

// Bad user input: config values out of bounds, unknown keys, malformed corpus
// files. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operational failure while running: IO, model errors. Exit code 2.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote classifier wire failure. Carries the endpoint and the index of the
// failing chunk within the batched request.
class TransportError : public RunError {
 public:
  TransportError(std::string endpoint, std::size_t chunk_index, const std::string& detail)
      : RunError("remote classifier error at " + endpoint + " (chunk " +
                 std::to_string(chunk_index) + "): " + detail),
        endpoint_(std::move(endpoint)),
        chunk_index_(chunk_index) {}

  const std::string& endpoint() const { return endpoint_; }
  std::size_t chunk_index() const { return chunk_index_; }

 private:
  std::string endpoint_;
  std::size_t chunk_index_;
};

}  // namespace uncq
