#pragma once

#include <span>
#include <utility>
#include <vector>

#include "netmpg/types.hpp"

namespace netmpg {

// Mixed-radix bijection between tuples and flat indices. The first component
// is the least significant digit: index = v0 + n0*(v1 + n1*(v2 + ...)).
class MixedRadix {
 public:
  MixedRadix() = default;
  explicit MixedRadix(std::vector<int> sizes);

  // -1 when the product overflows Index (space too large to enumerate).
  Index size() const { return size_; }
  bool saturated() const { return size_ < 0; }
  int digits() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<Index>& strides() const { return strides_; }

  Index encode(std::span<const int> values) const;
  void decode(Index index, std::vector<int>& out) const;
  std::vector<int> decode(Index index) const;

 private:
  std::vector<int> sizes_;
  std::vector<Index> strides_;
  Index size_ = 1;
};

// Splits a full per-agent tuple index into (members, rest) sub-indices, where
// members is an ascending agent-id subset. Both sub-indices use the same
// little-endian mixed-radix convention.
class SubsetSplit {
 public:
  SubsetSplit(const std::vector<int>& sizes, std::vector<int> members);

  const std::vector<int>& members() const { return members_; }
  const std::vector<int>& rest() const { return rest_; }
  const MixedRadix& full() const { return full_; }
  const MixedRadix& local() const { return local_; }
  const MixedRadix& exterior() const { return ext_; }

  // Local index straight from full component values.
  Index local_of(std::span<const int> full_values) const;

  std::pair<Index, Index> split(Index full_index) const;
  Index join(Index local_index, Index ext_index) const;

 private:
  std::vector<int> members_, rest_;
  MixedRadix full_, local_, ext_;
};

} // namespace netmpg
