#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rearrange {

using Engine = std::mt19937_64;

/// Seed for an independent stream identified by (name, master seed, replicate).
/// Streams for different replicates do not depend on evaluation order.
std::uint64_t derive_stream(std::string_view name, std::uint64_t seed, std::uint64_t replicate);

inline Engine make_engine(std::string_view name, std::uint64_t seed, std::uint64_t replicate = 0) {
  return Engine(derive_stream(name, seed, replicate));
}

/// 64-bit FNV-1a, used for stream derivation and config hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace rearrange
