#pragma once

#include <cstdint>
#include <array>

namespace codareg {

//! Deterministic counter-keyed random stream.
//!
//! A stream is fully determined by (seed, stream_id): the pair seeds an
//! xoshiro256++ generator through splitmix64. Identical pairs produce
//! identical draw sequences on every platform, toolchain, and thread
//! count, which is what makes the Monte Carlo tables reproducible. The
//! standard <random> distributions are implementation-defined, so all
//! variate transforms are spelled out here.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  //! Next raw 64-bit word.
  std::uint64_t next_u64();

  //! Uniform draw strictly inside (0, 1), 53-bit resolution.
  double uniform01();

  //! Standard normal via Box-Muller; consumes exactly two uniforms,
  //! no cached spare, so the draw count per call is fixed.
  double normal();

  //! Gamma(shape, 1) via Marsaglia-Tsang squeeze rejection (exact).
  double gamma(double shape);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_;
};

}  // namespace codareg
