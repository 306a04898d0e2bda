#pragma once

#include <array>
#include <cstdint>

namespace vecchia {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A stream is identified by a 64-bit key (the user seed) and a 64-bit
/// stream id; within a stream, draws are indexed by a 64-bit counter. Any
/// draw can be regenerated from (seed, stream, index) alone, so ensembles
/// parallelize without sharing state and reproduce bit-for-bit.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  /// Raw bijection: ten rounds applied to `counter` under `key`.
  static Block generate(Block counter, Key key);

  Philox(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Unbiased integer in [0, bound) by multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t bound);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Sub-stream ids used by the library so independent consumers of one user
/// seed never overlap.
namespace streams {
inline constexpr std::uint64_t random_ordering = 1;
inline constexpr std::uint64_t prediction_ordering = 2;
inline constexpr std::uint64_t simulation = 1ULL << 32;  // + member index
inline constexpr std::uint64_t synthetic_data = 3;
}  // namespace streams

}  // namespace vecchia
