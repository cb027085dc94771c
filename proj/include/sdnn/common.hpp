#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdnn {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ============================================================================
// warning sink
//
// Warnings are collected in a per-thread log so library callers (and tests)
// can inspect them; set_warn_stderr(true) additionally mirrors each message
// to stderr.  The CLI turns mirroring on, the test suites read the log.
// ============================================================================

void warn(const std::string& message);
std::vector<std::string>& warning_log();
void clear_warnings();
void set_warn_stderr(bool enabled);

// ============================================================================
// seeding
// ============================================================================

// splitmix64 finalizer; used to derive independent streams from one user seed
// so that e.g. weight init and epoch shuffling never share generator state.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace sdnn
