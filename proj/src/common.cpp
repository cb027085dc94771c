#include "sdnn/common.hpp"

#include <iostream>

namespace sdnn {

namespace {
thread_local std::vector<std::string> g_warnings;
bool g_warn_stderr = false;
}  // namespace

void warn(const std::string& message) {
  g_warnings.push_back(message);
  if (g_warn_stderr) std::cerr << "warning: " << message << "\n";
}

std::vector<std::string>& warning_log() { return g_warnings; }

void clear_warnings() { g_warnings.clear(); }

void set_warn_stderr(bool enabled) { g_warn_stderr = enabled; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer applied to seed advanced by the stream id
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace sdnn
