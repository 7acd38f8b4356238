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

#ifndef AGZO_LEDGER_HPP_
#define AGZO_LEDGER_HPP_

#include <atomic>
#include <cstdint>

namespace agzo::ledger {

// Process-global accounting of live Matrix payload bytes. Only Matrix buffers
// are counted (rows * cols * sizeof(double)); everything else (metadata,
// scratch vectors, strings) is invisible. The peak is resettable so each
// experiment can measure its own high-water mark.

struct Snapshot {
  std::uint64_t live_bytes;
  std::uint64_t peak_bytes;
};

namespace detail {
inline std::atomic<std::uint64_t> g_live{0};
inline std::atomic<std::uint64_t> g_peak{0};
}  // namespace detail

inline void on_alloc(std::uint64_t bytes) {
  const std::uint64_t live =
      detail::g_live.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::uint64_t peak = detail::g_peak.load(std::memory_order_relaxed);
  while (live > peak &&
         !detail::g_peak.compare_exchange_weak(peak, live,
                                               std::memory_order_relaxed)) {
  }
}

inline void on_free(std::uint64_t bytes) {
  detail::g_live.fetch_sub(bytes, std::memory_order_relaxed);
}

inline Snapshot snapshot() {
  return Snapshot{detail::g_live.load(std::memory_order_relaxed),
                  detail::g_peak.load(std::memory_order_relaxed)};
}

// Restart peak tracking from the current live total.
inline void reset_peak() {
  detail::g_peak.store(detail::g_live.load(std::memory_order_relaxed),
                       std::memory_order_relaxed);
}

}  // namespace agzo::ledger

#endif  // AGZO_LEDGER_HPP_
