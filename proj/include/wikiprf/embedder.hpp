// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file embedder.hpp
 *  \brief Feature extractor mapping text and images to unit-norm vectors.
 *
 * Two backends share one interface: a deterministic hash-expansion mock
 * (pure function of seed and input bytes) and a client for a remote
 * embedding service. Both are safe to share across threads.
 */

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wikiprf/imaging.hpp"

namespace wikiprf {

/// Unit-norm vector. Construction normalizes; a zero vector is rejected.
class Embedding {
 public:
  Embedding() = default;

  /// L2-normalizes `values`. Throws Error(InvalidArgument) on empty, zero or
  /// non-finite input.
  static Embedding normalized(std::vector<float> values);

  /// Adopts `values` as-is; they must already be unit-norm within 1e-5.
  static Embedding from_unit(std::vector<float> values);

  std::size_t dimension() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  double norm() const noexcept;

  bool operator==(const Embedding&) const = default;

 private:
  explicit Embedding(std::vector<float> values) : values_(std::move(values)) {}
  std::vector<float> values_;
};

/// Dot product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b);
double cosine(const Embedding& a, const Embedding& b);

enum class EmbedderBackend { Mock, Remote };

struct EmbedderConfig {
  EmbedderBackend backend = EmbedderBackend::Mock;
  std::size_t dimension = 64;
  std::uint64_t seed = 7;
  std::string endpoint;  // Remote only, e.g. http://127.0.0.1:8080/embed
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  int retries = 3;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  /// Throws Error(EmptyInput) if text is blank.
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual Embedding embed_image(const imaging::Image& image) const = 0;
};

/// Deterministic mock: the vector is a keyed SHA-256 expansion of the
/// input, normalized. Text and images hash under distinct domain tags.
class MockEmbedder final : public Embedder {
 public:
  MockEmbedder(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const override { return dimension_; }
  Embedding embed_text(std::string_view text) const override;
  Embedding embed_image(const imaging::Image& image) const override;

  /// The raw expansion before normalization; exposed for oracle tests.
  static std::vector<float> expand(std::uint64_t seed, std::string_view domain,
                                   std::span<const std::uint8_t> bytes, std::size_t dimension);

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

class HttpJsonClient;

/// Wire: POST {"kind": "text"|"image", "payload": text | base64 PPM}
/// -> {"embedding": [d numbers]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(const EmbedderConfig& config);
  ~RemoteEmbedder() override;

  std::size_t dimension() const override { return dimension_; }
  Embedding embed_text(std::string_view text) const override;
  Embedding embed_image(const imaging::Image& image) const override;

 private:
  Embedding request(std::string_view kind, std::string payload) const;

  std::size_t dimension_;
  std::unique_ptr<HttpJsonClient> client_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config);

}  // namespace wikiprf
