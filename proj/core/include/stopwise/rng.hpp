#pragma once

#include <array>
#include <cstdint>

namespace stopwise {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is
/// a pure function of (counter, key), so substreams are independent of
/// scheduling.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

/// Sequential draws from the Philox block sequence of one (seed, stream)
/// pair. The stream index occupies the upper counter words.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double next_double() noexcept;

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter buf_{};
  int used_ = 4;
};

}  // namespace stopwise
