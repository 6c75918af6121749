#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "uncq/classifier.hpp"

namespace uncq {

struct RemoteEndpoint {
  std::string base_url;
  double timeout_s = 10.0;
  int max_batch = 64;  // wire calls carry at most this many instances
};

// HTTP adapter for an out-of-process classifier.
//
// Wire protocol: POST {base_url}/v1/predict with {"instances": [[tok,...],...]},
// expecting 200 and {"logits": [[l_1..l_C],...]} in the same order. Anything
// else raises TransportError with the endpoint and failing chunk index.
//
// Responses are memoized for the lifetime of this object, keyed by the token
// list, so repeated coalition queries cost one wire call and a flaky upstream
// cannot return two different answers within one run. Cache access is
// serialized, which also makes the adapter safe to share across workers.
class RemoteClassifier : public Classifier {
 public:
  RemoteClassifier(RemoteEndpoint endpoint, LabelSpace label_space);
  ~RemoteClassifier() override;

  const LabelSpace& label_space() const override { return label_space_; }
  Logits raw_logits(TokenView tokens) const override;
  std::vector<Logits> raw_logits_batch(const TokenBatch& inputs) const override;

  const RemoteEndpoint& endpoint() const { return endpoint_; }
  std::size_t wire_calls() const;

 private:
  std::vector<Logits> fetch_chunk(const TokenBatch& inputs, std::size_t chunk_index) const;

  RemoteEndpoint endpoint_;
  LabelSpace label_space_;
  struct Http;
  std::unique_ptr<Http> http_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Logits> memo_;
  mutable std::size_t wire_calls_ = 0;
};

}  // namespace uncq
