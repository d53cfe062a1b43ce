#include "sspop/data.hpp"

#include <algorithm>
#include <stdexcept>

namespace sspop {

long ObservedSequence::total_size() const {
  long t = 0;
  for (const int u : unit_sizes) t += u;
  return t;
}

int ObservedSequence::max_size() const {
  return unit_sizes.empty() ? 0 : *std::max_element(unit_sizes.begin(), unit_sizes.end());
}

void ObservedSequence::validate() const {
  if (unit_sizes.empty()) throw std::invalid_argument("observed sequence is empty");
  for (const int u : unit_sizes) {
    if (u < 1) throw std::invalid_argument("observed unit sizes must be >= 1");
  }
  if (!trait.empty() && trait.size() != unit_sizes.size()) {
    throw std::invalid_argument("trait length must match the number of respondents");
  }
  for (const auto t : trait) {
    if (t > 1) throw std::invalid_argument("trait values must be 0 or 1");
  }
}

void SizedPopulation::validate() const {
  if (sizes.empty()) throw std::invalid_argument("population is empty");
  for (const int u : sizes) {
    if (u < 0) throw std::invalid_argument("population sizes must be nonnegative");
  }
  if (!trait.empty() && trait.size() != sizes.size()) {
    throw std::invalid_argument("trait length must match the population size");
  }
}

}  // namespace sspop
