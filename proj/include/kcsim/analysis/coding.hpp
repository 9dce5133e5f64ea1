#pragma once

#include <stdexcept>
#include <string>

#include "kcsim/bitstring.hpp"
#include "kcsim/tree.hpp"

namespace kcsim {

class InsufficientDepth : public std::runtime_error {
 public:
  InsufficientDepth(std::size_t have, std::size_t need)
      : std::runtime_error("coding join needs " + std::to_string(need) + " settled levels, tree has " +
                           std::to_string(have)) {}
};

struct CodingJoin {
  BitString path_b;          // carries the target at the coding locations
  BitString path_c;          // carries the complement there
  BitString reconstruction;  // B's bits where B and C differ
};

/// Two living paths agreeing off the coding locations n_0..n_{|target|-1};
/// B carries the target there, C its complement. Levels past the target use 0.
inline CodingJoin coding_join(const ConstructionTree& tree, const BitString& target) {
  if (target.size() > tree.level_count()) throw InsufficientDepth(tree.level_count(), target.size());
  BitString cb = target;
  BitString cc;
  for (std::size_t j = 0; j < target.size(); ++j) cc.push_back(1 - target.bit(j));
  CodingJoin out;
  out.path_b = tree.leaf_for(cb);
  out.path_c = tree.leaf_for(cc);
  for (std::size_t p = 0; p < out.path_b.size(); ++p) {
    if (out.path_b.bit(p) != out.path_c.bit(p)) out.reconstruction.push_back(out.path_b.bit(p));
  }
  return out;
}

}  // namespace kcsim
