// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wikiprf::codec {

using Bytes = std::vector<std::uint8_t>;
using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws Error(BadRecord) on malformed input. Whitespace is ignored.
Bytes base64_decode(std::string_view text);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Little-endian helpers for the binary index format.
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_f32(Bytes& out, float v);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset);
float get_f32(std::span<const std::uint8_t> in, std::size_t offset);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

std::string trim(std::string_view s);

}  // namespace wikiprf::codec
