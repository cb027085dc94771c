#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdnn/iht.hpp"
#include "sdnn/nn.hpp"

namespace sdnn::io {

// ============================================================================
// .sdnn bitmask checkpoints
//
// Little-endian stream:
//   "SDNN"  magic, 4 bytes
//   u16     format version (currently 1)
//   u16     layer count
// then per layer:
//   u8      layer kind tag (the LayerKind enum value)
//   u8      weight rank (0 for parameter-free layers)
//   u32[r]  weight dims, row-major
//   u64     P, the weight count (product of dims)
//   byte[ceil(P/8)]  retained-entry bitmask, LSB-first: bit i of byte i/8
//                    corresponds to flat weight i
//   u64     nnz, the number of set mask bits
//   f32[nnz] retained weight values in ascending index order
//   u64     bias count
//   f32[..] bias values
//
// Values are narrowed to f32 on encode and widened back on decode; training
// happens in f64, so the first save is lossy at the f32 precision boundary
// and every later round trip is exact.  A dense checkpoint is the same
// layout with an all-ones mask.
// ============================================================================

struct LayerRecord {
  nn::LayerKind kind;
  std::vector<std::size_t> dims;  // weight shape; empty for parameter-free
  std::vector<double> weights;    // full P values, zeros where the mask is 0
  std::vector<double> biases;
};

std::vector<std::uint8_t> encode_bitmask(const nn::NetworkModel& model,
                                         bool dense = false);

// Throws Error with the byte offset on bad magic, unknown version or kind,
// truncation, dims/count inconsistencies, and mask/value-count mismatches.
std::vector<LayerRecord> decode_bitmask(const std::vector<std::uint8_t>& bytes);

// Install decoded records into an architecture-matched model (kinds and
// shapes must agree layer by layer).
void load_weights(nn::NetworkModel& model,
                  const std::vector<LayerRecord>& records);

void save_checkpoint(const nn::NetworkModel& model, const std::string& path,
                     bool dense = false);
std::vector<LayerRecord> load_checkpoint(const std::string& path);

// ============================================================================
// size accounting
// ============================================================================

struct SizeReport {
  std::size_t dense_bytes = 0;     // 4 bytes per weight, biases excluded
  std::size_t mask_bytes = 0;      // sum of ceil(P/8)
  std::size_t value_bytes = 0;     // 4 * nnz
  std::size_t bias_bytes = 0;      // 4 * bias count
  std::size_t overhead_bytes = 0;  // header + per-layer fixed fields
  std::size_t bitmask_bytes = 0;   // whole encoded stream
  double compression_ratio = 0.0;  // dense_bytes / bitmask_bytes
  double payload_ratio = 0.0;      // dense_bytes / (mask + value bytes)
};

// Accounting for the model as it stands (nnz = current nonzero counts).
// bitmask_bytes equals the exact encode_bitmask stream length.
SizeReport size_report(const nn::NetworkModel& model);

// Projected accounting at the plan's final budgets (nnz = min(budget, P)).
SizeReport size_report(const nn::NetworkModel& model,
                       const iht::SparsityPlan& plan);

}  // namespace sdnn::io
