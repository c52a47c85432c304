#include "netmpg/indexing.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace netmpg {

MixedRadix::MixedRadix(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  strides_.resize(sizes_.size());
  constexpr Index kMax = std::numeric_limits<Index>::max();
  Index stride = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] <= 0)
      throw std::invalid_argument("MixedRadix: sizes must be positive");
    strides_[i] = overflow ? -1 : stride;
    if (!overflow) {
      if (stride > kMax / sizes_[i]) overflow = true;
      else stride *= sizes_[i];
    }
  }
  size_ = overflow ? -1 : stride;
}

Index MixedRadix::encode(std::span<const int> values) const {
  if (saturated())
    throw std::overflow_error("MixedRadix::encode: index space too large");
  if (values.size() != sizes_.size())
    throw std::invalid_argument("MixedRadix::encode: arity mismatch");
  Index idx = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    const int v = values[i];
    if (v < 0 || v >= sizes_[i])
      throw std::out_of_range("MixedRadix::encode: component " +
                              std::to_string(i) + " out of range");
    idx += strides_[i] * v;
  }
  return idx;
}

void MixedRadix::decode(Index index, std::vector<int>& out) const {
  if (saturated())
    throw std::overflow_error("MixedRadix::decode: index space too large");
  if (index < 0 || index >= size_)
    throw std::out_of_range("MixedRadix::decode: index out of range");
  out.resize(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    out[i] = static_cast<int>(index % sizes_[i]);
    index /= sizes_[i];
  }
}

std::vector<int> MixedRadix::decode(Index index) const {
  std::vector<int> out;
  decode(index, out);
  return out;
}

SubsetSplit::SubsetSplit(const std::vector<int>& sizes, std::vector<int> members)
    : members_(std::move(members)) {
  if (!std::is_sorted(members_.begin(), members_.end()))
    throw std::invalid_argument("SubsetSplit: members must be ascending");
  std::vector<int> local_sizes, ext_sizes;
  std::size_t m = 0;
  for (int i = 0; i < static_cast<int>(sizes.size()); ++i) {
    if (m < members_.size() && members_[m] == i) {
      local_sizes.push_back(sizes[i]);
      ++m;
    } else {
      rest_.push_back(i);
      ext_sizes.push_back(sizes[i]);
    }
  }
  if (m != members_.size())
    throw std::invalid_argument("SubsetSplit: member id out of range");
  full_ = MixedRadix(sizes);
  local_ = MixedRadix(local_sizes);
  ext_ = MixedRadix(ext_sizes);
}

Index SubsetSplit::local_of(std::span<const int> full_values) const {
  if (static_cast<int>(full_values.size()) != full_.digits())
    throw std::invalid_argument("SubsetSplit::local_of: arity mismatch");
  std::vector<int> vals(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k)
    vals[k] = full_values[static_cast<std::size_t>(members_[k])];
  return local_.encode(vals);
}

std::pair<Index, Index> SubsetSplit::split(Index full_index) const {
  std::vector<int> digits = full_.decode(full_index);
  std::vector<int> lv(members_.size()), ev(rest_.size());
  for (std::size_t k = 0; k < members_.size(); ++k)
    lv[k] = digits[static_cast<std::size_t>(members_[k])];
  for (std::size_t k = 0; k < rest_.size(); ++k)
    ev[k] = digits[static_cast<std::size_t>(rest_[k])];
  return {local_.encode(lv), ext_.encode(ev)};
}

Index SubsetSplit::join(Index local_index, Index ext_index) const {
  std::vector<int> lv = local_.decode(local_index);
  std::vector<int> ev = ext_.decode(ext_index);
  std::vector<int> digits(static_cast<std::size_t>(full_.digits()));
  for (std::size_t k = 0; k < members_.size(); ++k)
    digits[static_cast<std::size_t>(members_[k])] = lv[k];
  for (std::size_t k = 0; k < rest_.size(); ++k)
    digits[static_cast<std::size_t>(rest_[k])] = ev[k];
  return full_.encode(digits);
}

} // namespace netmpg
