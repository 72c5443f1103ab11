#include <kaonlab/rng.hpp>

#include <stdexcept>

namespace kaonlab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t(a) * b;
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

inline PhiloxCounter round(const PhiloxCounter& c, const PhiloxKey& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kM0, c[0], hi0, lo0);
  mulhilo(kM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  ctr = round(ctr, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kW0;
    key[1] += kW1;
    ctr = round(ctr, key);
  }
  return ctr;
}

CounterRng::CounterRng(RunSeed seed, std::uint64_t substream, RngDomain domain)
    : key_{std::uint32_t(seed.seed), std::uint32_t(seed.seed >> 32)},
      ctr_{std::uint32_t(substream), std::uint32_t(substream >> 32),
           (seed.stream_id & 0x00FFFFFFu) | (std::uint32_t(domain) << 24), 0u} {
  if (seed.stream_id > 0x00FFFFFFu) throw std::invalid_argument("stream_id must fit in 24 bits");
}

void CounterRng::refill() {
  buf_ = philox4x32_10(ctr_, key_);
  if (++ctr_[3] == 0) throw std::overflow_error("counter-based substream exhausted");
  pos_ = 0;
}

CounterRng::result_type CounterRng::operator()() {
  if (pos_ == 4) refill();
  return buf_[pos_++];
}

double CounterRng::uniform() {
  const std::uint64_t hi = (*this)();
  const std::uint64_t lo = (*this)();
  const std::uint64_t x = ((hi << 32) | lo) >> 11;
  return (double(x) + 0.5) * 0x1.0p-53;
}

}  // namespace kaonlab
