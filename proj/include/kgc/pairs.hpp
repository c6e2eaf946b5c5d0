#pragma once

#include "kgc/core.hpp"

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgc {

struct LabeledPair {
  std::string source;
  std::string target;
  int label = 0;
};

/// Labeled (source, target) pairs with no duplicate keys.
class LabeledPairSet {
 public:
  LabeledPairSet() = default;

  // Exact duplicates collapse; a conflicting label throws DataError.
  // Returns false when the pair was already present.
  bool add(std::string source, std::string target, int label);

  const std::vector<LabeledPair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  std::size_t positives() const noexcept { return positives_; }
  std::size_t negatives() const noexcept { return pairs_.size() - positives_; }
  bool contains(const std::string& source, const std::string& target) const;
  const int* find_label(const std::string& source, const std::string& target) const;

  std::string provenance;

 private:
  static std::string key(const std::string& source, const std::string& target);

  std::vector<LabeledPair> pairs_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t positives_ = 0;
};

// CSV with header `source,target,label`.
LabeledPairSet load_labeled_pairs(std::istream& in);
void save_labeled_pairs(const LabeledPairSet& pairs, std::ostream& out);

}  // namespace kgc
