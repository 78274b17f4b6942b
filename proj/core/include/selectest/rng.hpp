#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace selectest {

/// Philox4x32-10 block function (Salmon et al. 2011). Maps a 128-bit counter
/// and a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The draw sequence depends only on
/// (seed, stream_id), so replications can run on any thread in any order and
/// still reproduce bit for bit.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent sub-stream, keyed by `index`. Same seed, hashed stream id.
  RngStream child(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Poisson(mean) by sequential inversion; intended for small means.
  std::uint64_t poisson(double mean);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// n i.i.d. U(0,1) draws from a copy of `stream` (the argument is not advanced).
std::vector<double> draw_uniforms(RngStream stream, std::size_t n);

/// SplitMix64 finalizer, used to derive stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace selectest
