#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dsmflow {

/// Deterministic uniform stream on the open interval (0, 1).
///
/// Version "mt19937_64-u53mid-v1": std::mt19937_64 seeded with the raw seed
/// (its output sequence is fixed by the C++ standard), each 64-bit word w
/// mapped to ((w >> 11) + 0.5) * 2^-53. Changing either step changes every
/// golden dataset, so bump the version name if you do.
class UniformStream {
public:
  static constexpr std::string_view kName = "mt19937_64-u53mid-v1";

  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const std::uint64_t w = engine_();
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace dsmflow
