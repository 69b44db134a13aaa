#include "adaptpara/checksum.hpp"

#include <cstdio>

namespace adaptpara {

std::string Hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string FeatureOrderHash(std::span<const std::string_view> names) {
  std::string joined;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) joined.push_back(',');
    joined.append(names[i]);
  }
  return Hex64(Fnv1a64(joined));
}

}  // namespace adaptpara
