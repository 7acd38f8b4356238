// Copyright 2026 The agzo-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AGZO_RNG_HPP_
#define AGZO_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

namespace agzo {

// Every random draw in the lab is addressed by (base, stream, counter).
// base+stream select a Philox key, the counter indexes blocks within the
// stream, so any perturbation can be regenerated bit-exactly from its key
// without storing the values. stream is conventionally a layer, trial, or
// step index.
struct SeedKey {
  std::uint64_t base = 0;
  std::uint64_t stream = 0;
};

inline SeedKey with_stream(SeedKey key, std::uint64_t stream) {
  return SeedKey{key.base, stream};
}

namespace rng_detail {

// splitmix64 output function (Vigna); used only for key derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fold(std::uint64_t acc, std::uint64_t v) {
  return mix64(acc ^ mix64(v));
}

// Philox4x64-10 (Salmon et al., SC'11), the same fixed parameters as
// Random123 and numpy.random.Philox. Key is 2x64 bits, counter 4x64.
inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> philox4x64(
    std::array<std::uint64_t, 4> ctr, std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Block `counter` of the stream addressed by `key`.
inline std::array<std::uint64_t, 4> philox_block(SeedKey key,
                                                 std::uint64_t counter) {
  return philox4x64({counter, 0, 0, 0}, {key.base, key.stream});
}

// Uniform in [0,1) from the top 53 bits.
inline double to_unit(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Uniform in (0,1]; safe as a log argument.
inline double to_unit_pos(std::uint64_t w) {
  return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace rng_detail

// Derive an unrelated child key. tag distinguishes purposes (layer init,
// perturbation, subspace sketch, ...), index distinguishes siblings.
inline SeedKey fork(SeedKey key, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t h = rng_detail::fold(key.base, key.stream);
  h = rng_detail::fold(h, tag);
  h = rng_detail::fold(h, index);
  return SeedKey{h, 0};
}

// Purpose tags for fork(). Values are arbitrary but frozen: changing them
// changes every downstream draw.
enum SeedTag : std::uint64_t {
  kTagTask = 1,
  kTagTeacher = 2,
  kTagInputs = 3,
  kTagNoise = 4,
  kTagShuffle = 5,
  kTagInit = 6,
  kTagStep = 7,
  kTagPerturb = 8,
  kTagSubspace = 9,
  kTagTrial = 10,
  kTagFactorU = 11,
  kTagFactorV = 12,
  kTagObjective = 13,
};

// Deterministic stream of N(0,1) values with O(1) random access. One Philox
// block yields four uniforms and, through two Box-Muller pairs, four normals:
//   z0 = r1 cos(2 pi u1), z1 = r1 sin(2 pi u1), r1 = sqrt(-2 ln u0)
// and likewise for words 2,3. Entry i lives in block i/4, slot i%4, so any
// prefix, suffix, or single entry regenerates identically.
class NormalStream {
 public:
  explicit NormalStream(SeedKey key) : key_(key) {}

  double at(std::uint64_t i) const {
    std::array<double, 4> z;
    block(i >> 2, z);
    return z[i & 3];
  }

  void fill(double* dst, std::uint64_t count, std::uint64_t first = 0) const {
    std::uint64_t i = first;
    const std::uint64_t end = first + count;
    std::array<double, 4> z;
    while (i < end) {
      block(i >> 2, z);
      std::uint64_t slot = i & 3;
      do {
        *dst++ = z[slot++];
        ++i;
      } while (slot < 4 && i < end);
    }
  }

  // Raw 64-bit word i of the stream (for integer draws such as shuffles).
  std::uint64_t word(std::uint64_t i) const {
    return rng_detail::philox_block(key_, i >> 2)[i & 3];
  }

 private:
  void block(std::uint64_t counter, std::array<double, 4>& z) const {
    const auto w = rng_detail::philox_block(key_, counter);
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double r0 = std::sqrt(-2.0 * std::log(rng_detail::to_unit_pos(w[0])));
    const double t0 = kTwoPi * rng_detail::to_unit(w[1]);
    const double r1 = std::sqrt(-2.0 * std::log(rng_detail::to_unit_pos(w[2])));
    const double t1 = kTwoPi * rng_detail::to_unit(w[3]);
    z[0] = r0 * std::cos(t0);
    z[1] = r0 * std::sin(t0);
    z[2] = r1 * std::cos(t1);
    z[3] = r1 * std::sin(t1);
  }

  SeedKey key_;
};

}  // namespace agzo

#endif  // AGZO_RNG_HPP_
