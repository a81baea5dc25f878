#pragma once

#include <cstdint>
#include <vector>

namespace obsnet {

enum class PositionRole : std::uint8_t { word, special, pad, observer };

// Per-sequence allow/deny matrix of side max_len + n_observers.
//
// Observer and pad positions are never valid attention keys. Observer queries
// read only the real input tokens; pad query rows are fully denied (their
// outputs are never consumed downstream).
struct AttentionMask {
  std::size_t side = 0;
  std::vector<std::uint8_t> allow;   // row-major, side x side
  std::vector<PositionRole> roles;   // per position

  bool allowed(std::size_t q, std::size_t k) const { return allow[q * side + k] != 0; }
};

// eligibility holds one flag per word/special position (pads false); observers
// are appended after the max_len word positions. The mask is layer-independent.
AttentionMask build_attention_mask(const std::vector<std::uint8_t>& eligibility,
                                   std::size_t n_observers);

}  // namespace obsnet
