#include "obsnet/mask.hpp"

#include "obsnet/errors.hpp"

namespace obsnet {

AttentionMask build_attention_mask(const std::vector<std::uint8_t>& eligibility,
                                   std::size_t n_observers) {
  const std::size_t max_len = eligibility.size();
  std::size_t n_eligible = 0;
  std::size_t last_eligible = 0;
  for (std::size_t i = 0; i < max_len; ++i)
    if (eligibility[i]) {
      ++n_eligible;
      last_eligible = i;
    }
  if (n_eligible == 0)
    throw ContractError("build_attention_mask: all-pad sequence");

  AttentionMask m;
  m.side = max_len + n_observers;
  m.allow.assign(m.side * m.side, 0);
  m.roles.assign(m.side, PositionRole::pad);
  for (std::size_t i = 0; i < max_len; ++i) {
    if (!eligibility[i]) continue;
    m.roles[i] = (i == 0 || i == last_eligible) ? PositionRole::special : PositionRole::word;
  }
  for (std::size_t i = 0; i < n_observers; ++i)
    m.roles[max_len + i] = PositionRole::observer;

  // Every non-pad query may attend exactly the eligible input positions.
  // Observer and pad columns are denied everywhere, including for observer
  // queries (observers do not attend to themselves or each other).
  for (std::size_t q = 0; q < m.side; ++q) {
    if (m.roles[q] == PositionRole::pad) continue;
    for (std::size_t k = 0; k < max_len; ++k)
      if (eligibility[k]) m.allow[q * m.side + k] = 1;
  }
  return m;
}

}  // namespace obsnet
