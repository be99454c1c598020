#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ttcast::util {

// Worker-thread cap: TTCAST_THREADS, else hardware concurrency.
inline unsigned max_threads() {
  if (const char* env = std::getenv("TTCAST_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs fn(i) for i in [0, n) across up to max_threads() workers. Results must
// be written to disjoint slots; no synchronization is provided.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(max_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk, end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end]() {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::uint32_t crc32_bytes(const void* data, std::size_t len);

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const void* data, std::size_t len);

inline const char* version_string() { return "ttcast 0.1.0"; }

}  // namespace ttcast::util
