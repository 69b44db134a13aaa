#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace adaptpara {

// 64-bit FNV-1a. Used for model checksums and feature-order fingerprints,
// not for anything adversarial.
constexpr std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string Hex64(std::uint64_t value);

// Fingerprint of an ordered feature-name list ("a,b,c").
std::string FeatureOrderHash(std::span<const std::string_view> names);

}  // namespace adaptpara
