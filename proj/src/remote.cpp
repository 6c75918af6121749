#include "uncq/remote.hpp"

#include <cmath>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "uncq/errors.hpp"
#include "uncq/log.hpp"

namespace uncq {

namespace {

// Length-prefixed join; unambiguous for arbitrary token bytes.
std::string memo_key(TokenView tokens) {
  std::string key;
  for (const auto& token : tokens) {
    key += std::to_string(token.size());
    key.push_back(':');
    key += token;
  }
  return key;
}

}  // namespace

struct RemoteClassifier::Http {
  explicit Http(const RemoteEndpoint& endpoint) : client(endpoint.base_url) {
    auto seconds = static_cast<time_t>(endpoint.timeout_s);
    auto micros = static_cast<time_t>((endpoint.timeout_s - static_cast<double>(seconds)) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    client.set_keep_alive(true);
  }
  httplib::Client client;
};

RemoteClassifier::RemoteClassifier(RemoteEndpoint endpoint, LabelSpace label_space)
    : endpoint_(std::move(endpoint)), label_space_(std::move(label_space)) {
  if (endpoint_.max_batch < 1) {
    throw std::invalid_argument("RemoteClassifier: max_batch must be >= 1");
  }
  if (label_space_.size() < 2) {
    throw std::invalid_argument("RemoteClassifier: label space must have >= 2 classes");
  }
  http_ = std::make_unique<Http>(endpoint_);
}

RemoteClassifier::~RemoteClassifier() = default;

std::size_t RemoteClassifier::wire_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return wire_calls_;
}

std::vector<Logits> RemoteClassifier::fetch_chunk(const TokenBatch& inputs,
                                                  std::size_t chunk_index) const {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& tokens : inputs) instances.push_back(tokens);
  nlohmann::json body{{"instances", instances}};

  ++wire_calls_;
  auto result = http_->client.Post("/v1/predict", body.dump(), "application/json");
  if (!result) {
    throw TransportError(endpoint_.base_url, chunk_index,
                         "no response (" + httplib::to_string(result.error()) + ")");
  }
  if (result->status != 200) {
    throw TransportError(endpoint_.base_url, chunk_index,
                         "HTTP status " + std::to_string(result->status));
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(endpoint_.base_url, chunk_index,
                         std::string("unparseable response body: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("logits") || !doc["logits"].is_array() ||
      doc["logits"].size() != inputs.size()) {
    throw TransportError(endpoint_.base_url, chunk_index,
                         "response shape mismatch: expected \"logits\" with " +
                             std::to_string(inputs.size()) + " rows");
  }

  auto c = static_cast<std::size_t>(label_space_.size());
  std::vector<Logits> out;
  out.reserve(inputs.size());
  for (const auto& row : doc["logits"]) {
    if (!row.is_array() || row.size() != c) {
      throw TransportError(endpoint_.base_url, chunk_index,
                           "response shape mismatch: logit row width != " + std::to_string(c));
    }
    Logits logits;
    logits.values.reserve(c);
    for (const auto& v : row) {
      if (!v.is_number()) {
        throw TransportError(endpoint_.base_url, chunk_index, "non-numeric logit in response");
      }
      double value = v.get<double>();
      if (!std::isfinite(value)) {
        throw TransportError(endpoint_.base_url, chunk_index, "non-finite logit in response");
      }
      logits.values.push_back(value);
    }
    out.push_back(std::move(logits));
  }
  return out;
}

std::vector<Logits> RemoteClassifier::raw_logits_batch(const TokenBatch& inputs) const {
  std::vector<Logits> results(inputs.size());

  std::lock_guard<std::mutex> lock(mutex_);
  // Indices whose token lists are not cached yet; duplicates within the batch
  // collapse onto one pending slot.
  std::vector<std::string> keys(inputs.size());
  std::vector<std::size_t> pending;
  std::unordered_map<std::string, std::size_t> pending_by_key;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    keys[i] = memo_key(inputs[i]);
    if (memo_.count(keys[i]) == 0 && pending_by_key.emplace(keys[i], i).second) {
      pending.push_back(i);
    }
  }

  std::size_t chunk_index = 0;
  for (std::size_t start = 0; start < pending.size();
       start += static_cast<std::size_t>(endpoint_.max_batch), ++chunk_index) {
    std::size_t stop =
        std::min(pending.size(), start + static_cast<std::size_t>(endpoint_.max_batch));
    TokenBatch chunk;
    chunk.reserve(stop - start);
    for (std::size_t p = start; p < stop; ++p) chunk.push_back(inputs[pending[p]]);
    std::vector<Logits> fetched = fetch_chunk(chunk, chunk_index);
    for (std::size_t p = start; p < stop; ++p) {
      memo_[keys[pending[p]]] = std::move(fetched[p - start]);
    }
  }
  if (chunk_index > 0) {
    log::debug("remote: " + std::to_string(pending.size()) + " uncached instances in " +
               std::to_string(chunk_index) + " wire call(s)");
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) results[i] = memo_.at(keys[i]);
  return results;
}

Logits RemoteClassifier::raw_logits(TokenView tokens) const {
  TokenBatch batch{std::vector<std::string>(tokens.begin(), tokens.end())};
  return raw_logits_batch(batch)[0];
}

}  // namespace uncq
