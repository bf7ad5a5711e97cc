#pragma once

#include <cstdint>
#include <string_view>

namespace relpol {

// 64-bit FNV-1a. Feature hashing and corpus content addressing are defined as
// pure functions of the byte string, identical on every platform.
constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = kFnvOffsetBasis) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace relpol
