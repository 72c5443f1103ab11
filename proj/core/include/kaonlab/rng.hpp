#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace kaonlab {

struct RunSeed {
  std::uint64_t seed = 0;
  std::uint32_t stream_id = 0;
};

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

// Purposes get disjoint counter spaces so e.g. detector smearing never
// reuses the numbers that placed the event.
enum class RngDomain : std::uint8_t {
  sample = 1,
  detector = 2,
  background = 3,
  power_alt = 4,
  power_null = 5,
  zeno = 6,
  joint = 7,
};

// Counter-based stream for one substream (e.g. one event or one trial).
// Keyed by the 64-bit seed; counter = (substream lo, substream hi,
// stream_id | domain, block). Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(RunSeed seed, std::uint64_t substream, RngDomain domain);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform();

 private:
  void refill();
  PhiloxKey key_;
  PhiloxCounter ctr_;
  PhiloxCounter buf_{};
  int pos_ = 4;
};

}  // namespace kaonlab
