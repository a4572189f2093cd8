#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace coop::explainer {

/// Contiguous window of indices around a center, clipped to [lo, hi].
struct Neighborhood {
  std::size_t center = 0;
  std::size_t radius = 0;
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive

  std::size_t size() const { return last - first + 1; }
  bool contains(std::size_t i) const { return i >= first && i <= last; }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> m;
    m.reserve(size());
    for (std::size_t i = first; i <= last; ++i) m.push_back(i);
    return m;
  }
};

inline Neighborhood make_neighborhood(std::size_t center, std::size_t radius, std::size_t lo, std::size_t hi) {
  if (lo > hi || center < lo || center > hi) {
    throw std::out_of_range("neighborhood center " + std::to_string(center) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]");
  }
  Neighborhood nb;
  nb.center = center;
  nb.radius = radius;
  nb.first = center - std::min(radius, center - lo);
  nb.last = center + std::min(radius, hi - center);
  return nb;
}

}  // namespace coop::explainer
