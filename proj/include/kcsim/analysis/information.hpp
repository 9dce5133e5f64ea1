#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/oracle.hpp"

namespace kcsim {

/// Injective pairing 1^|sigma| 0 sigma tau.
inline BitString pair_strings(const BitString& sigma, const BitString& tau) {
  BitString out;
  for (std::size_t i = 0; i < sigma.size(); ++i) out.push_back(1);
  out.push_back(0);
  out.append(sigma);
  out.append(tau);
  return out;
}

/// k -> (a, b) along the anti-diagonals a + b = 0, 1, 2, ...
inline std::pair<std::uint64_t, std::uint64_t> cantor_unpair(std::uint64_t k) {
  std::uint64_t w = 0;
  while ((w + 1) * (w + 2) / 2 <= k) ++w;
  const std::uint64_t b = k - w * (w + 1) / 2;
  return {w - b, b};
}

struct InformationPartial {
  DyadicMass sum;        // lower-bound witness for 2^I(A:B)
  std::size_t terms = 0;  // defined terms among the first `cutoff` pairs
  std::size_t cutoff = 0;
};

/// Partial sum over the first `cutoff` pairs (sigma, tau) of
/// 2^(K(sigma) - K^A(sigma) + K(tau) - K^B(tau) - K(<sigma,tau>)), current
/// table values, terms with an undefined K dropped. Only a finite-scale
/// witness: it never certifies finiteness.
inline InformationPartial self_information_partial(const ComplexityTable& table, const BitString& a,
                                                   const BitString& b, std::size_t cutoff) {
  InformationPartial out;
  out.cutoff = cutoff;
  for (std::uint64_t k = 0; k < cutoff; ++k) {
    auto [x, y] = cantor_unpair(k);
    const BitString sigma = length_lex_string(x);
    const BitString tau = length_lex_string(y);
    auto ks = table.k_plain(sigma);
    auto ksa = table.k_of(a, sigma);
    auto kt = table.k_plain(tau);
    auto ktb = table.k_of(b, tau);
    auto kp = table.k_plain(pair_strings(sigma, tau));
    if (!ks || !ksa || !kt || !ktb || !kp) continue;
    const std::int64_t e = static_cast<std::int64_t>(*ks) - static_cast<std::int64_t>(*ksa) +
                           static_cast<std::int64_t>(*kt) - static_cast<std::int64_t>(*ktb) -
                           static_cast<std::int64_t>(*kp);
    out.sum += DyadicMass::power_of_two(e);
    ++out.terms;
  }
  return out;
}

}  // namespace kcsim
