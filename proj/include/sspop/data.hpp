#ifndef SSPOP_DATA_HPP
#define SSPOP_DATA_HPP

#include <cstdint>
#include <vector>

namespace sspop {

// Recruitment-ordered observed unit sizes, optionally with a binary trait
// (e.g. infection status) per respondent.
struct ObservedSequence {
  std::vector<int> unit_sizes;     // g_1..g_n order
  std::vector<std::uint8_t> trait; // empty when the trait was not collected
  bool truncated = false;          // recruitment died out before the target n

  int n() const { return static_cast<int>(unit_sizes.size()); }
  bool has_trait() const { return !trait.empty(); }
  long total_size() const;
  int max_size() const;
  void validate() const;  // throws std::invalid_argument on contract violations
};

// A full population of unit sizes, optionally labeled.
struct SizedPopulation {
  std::vector<int> sizes;
  std::vector<std::uint8_t> trait;  // empty when unlabeled

  int size() const { return static_cast<int>(sizes.size()); }
  void validate() const;
};

}  // namespace sspop

#endif
