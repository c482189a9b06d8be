// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#include "wikiprf/embedder.hpp"

#include <cmath>

#include "http_client.hpp"
#include "wikiprf/codec.hpp"
#include "wikiprf/error.hpp"

namespace wikiprf {

Embedding Embedding::normalized(std::vector<float> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty embedding");
  double sq = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding component");
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  if (sq == 0.0) throw Error(ErrorCode::InvalidArgument, "zero embedding");
  const double inv = 1.0 / std::sqrt(sq);
  for (float& v : values) v = static_cast<float>(static_cast<double>(v) * inv);
  return Embedding(std::move(values));
}

Embedding Embedding::from_unit(std::vector<float> values) {
  Embedding e(std::move(values));
  if (e.values_.empty() || std::abs(e.norm() - 1.0) > 1e-5) {
    throw Error(ErrorCode::InvalidArgument, "embedding is not unit-norm");
  }
  return e;
}

double Embedding::norm() const noexcept { return std::sqrt(dot(values_, values_)); }

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dimension() != b.dimension()) throw Error(ErrorCode::DimensionMismatch, "cosine of unequal dimensions");
  return dot(a.values(), b.values());
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
  if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
}

std::vector<float> MockEmbedder::expand(std::uint64_t seed, std::string_view domain,
                                        std::span<const std::uint8_t> bytes, std::size_t dimension) {
  codec::Bytes keyed(domain.begin(), domain.end());
  keyed.insert(keyed.end(), bytes.begin(), bytes.end());
  const auto digest = codec::sha256(keyed);

  std::vector<float> out;
  out.reserve(dimension);
  for (std::uint32_t block = 0; out.size() < dimension; ++block) {
    codec::Bytes material;
    codec::put_u64(material, seed);
    material.insert(material.end(), digest.begin(), digest.end());
    codec::put_u32(material, block);
    const auto words = codec::sha256(material);
    for (std::size_t w = 0; w < 8 && out.size() < dimension; ++w) {
      const std::uint32_t u = codec::get_u32(words, w * 4);
      out.push_back(static_cast<float>(static_cast<double>(u) / 4294967296.0 * 2.0 - 1.0));
    }
  }
  return out;
}

Embedding MockEmbedder::embed_text(std::string_view text) const {
  if (codec::trim(text).empty()) throw Error(ErrorCode::EmptyInput, "cannot embed blank text");
  return Embedding::normalized(expand(seed_, std::string_view("text\0", 5), codec::as_bytes(text), dimension_));
}

Embedding MockEmbedder::embed_image(const imaging::Image& image) const {
  const auto bytes = imaging::encode_ppm(image);
  return Embedding::normalized(expand(seed_, std::string_view("image\0", 6), bytes, dimension_));
}

RemoteEmbedder::RemoteEmbedder(const EmbedderConfig& config)
    : dimension_(config.dimension),
      client_(std::make_unique<HttpJsonClient>(config.endpoint, config.timeout_seconds, config.max_in_flight,
                                               config.retries)) {}

RemoteEmbedder::~RemoteEmbedder() = default;

Embedding RemoteEmbedder::request(std::string_view kind, std::string payload) const {
  const nlohmann::json body = {{"kind", kind}, {"payload", std::move(payload)}};
  const auto response = client_->post(body);
  const auto it = response.find("embedding");
  if (it == response.end() || !it->is_array()) {
    throw Error(ErrorCode::RemoteUnavailable, "embedding service response lacks 'embedding'");
  }
  std::vector<float> values;
  values.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw Error(ErrorCode::RemoteUnavailable, "non-numeric embedding component");
    values.push_back(v.get<float>());
  }
  if (values.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "service returned " + std::to_string(values.size()) +
                                                   " components, expected " + std::to_string(dimension_));
  }
  return Embedding::normalized(std::move(values));
}

Embedding RemoteEmbedder::embed_text(std::string_view text) const {
  if (codec::trim(text).empty()) throw Error(ErrorCode::EmptyInput, "cannot embed blank text");
  return request("text", std::string(text));
}

Embedding RemoteEmbedder::embed_image(const imaging::Image& image) const {
  return request("image", codec::base64_encode(imaging::encode_ppm(image)));
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.backend == EmbedderBackend::Remote) return std::make_shared<RemoteEmbedder>(config);
  return std::make_shared<MockEmbedder>(config.dimension, config.seed);
}

}  // namespace wikiprf
