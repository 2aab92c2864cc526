#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "i2v/bytes.hpp"

namespace i2v {

/// Byte source for nonces, pseudonyms and key generation. Simulation runs use
/// SeededRandom so traces replay exactly; live processes use SystemRandom.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

class SeededRandom final : public RandomSource {
 public:
  /// Distinct streams from the same seed are independent generators.
  explicit SeededRandom(std::uint64_t seed, std::uint64_t stream = 0);
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mt19937_64 engine_;
};

/// OpenSSL's CSPRNG.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

}  // namespace i2v
