#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <numeric>
#include <vector>

#include "llmsched/core/errors.hpp"

namespace llmsched::bn {

// Table over a sorted set of discrete variables; the last variable varies
// fastest in `values`.
class Factor {
 public:
  Factor() : values_{1.0} {}

  Factor(std::vector<int> vars, std::vector<int> cards, std::vector<double> values)
      : vars_(std::move(vars)), cards_(std::move(cards)), values_(std::move(values)) {
    if (vars_.size() != cards_.size()) throw StructuralError("factor vars/cards mismatch");
    if (!std::is_sorted(vars_.begin(), vars_.end()) ||
        std::adjacent_find(vars_.begin(), vars_.end()) != vars_.end())
      throw StructuralError("factor variables must be sorted and unique");
    if (values_.size() != expected_size()) throw StructuralError("factor value table has wrong size");
  }

  const std::vector<int>& vars() const { return vars_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }

  int position(int var) const {
    auto it = std::lower_bound(vars_.begin(), vars_.end(), var);
    if (it == vars_.end() || *it != var) return -1;
    return static_cast<int>(it - vars_.begin());
  }
  bool contains(int var) const { return position(var) >= 0; }

  int card_of(int var) const {
    const int p = position(var);
    if (p < 0) throw StructuralError("variable not in factor");
    return cards_[static_cast<std::size_t>(p)];
  }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  void normalize() {
    const double z = sum();
    if (!(z > 0.0)) throw InconsistentEvidence("cannot normalize a zero factor");
    for (double& v : values_) v /= z;
  }

  // Flat index for an assignment aligned with vars().
  std::size_t index_of(const std::vector<int>& assignment) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) idx = idx * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(assignment[i]);
    return idx;
  }

  double at(const std::vector<int>& assignment) const { return values_[index_of(assignment)]; }

 private:
  std::size_t expected_size() const {
    std::size_t n = 1;
    for (int c : cards_) {
      if (c < 1) throw StructuralError("factor cardinality must be positive");
      n *= static_cast<std::size_t>(c);
    }
    return n;
  }

  std::vector<int> vars_;
  std::vector<int> cards_;
  std::vector<double> values_;
};

namespace detail {

// Walks every assignment of `vars/cards` in row-major order.
template <typename Fn>
void for_each_assignment(const std::vector<int>& cards, Fn&& fn) {
  std::vector<int> a(cards.size(), 0);
  std::size_t total = 1;
  for (int c : cards) total *= static_cast<std::size_t>(c);
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, a);
    for (std::size_t i = cards.size(); i-- > 0;) {
      if (++a[i] < cards[i]) break;
      a[i] = 0;
    }
  }
}

// Stride of each variable of `f` inside a table laid out over `vars`.
inline std::vector<std::size_t> strides_in(const Factor& f, const std::vector<int>& vars) {
  std::vector<std::size_t> own(f.vars().size(), 0);
  std::size_t s = 1;
  for (std::size_t i = f.vars().size(); i-- > 0;) {
    own[i] = s;
    s *= static_cast<std::size_t>(f.cards()[i]);
  }
  std::vector<std::size_t> out(vars.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const int p = f.position(vars[i]);
    if (p >= 0) out[i] = own[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace detail

inline Factor multiply(const Factor& a, const Factor& b) {
  std::vector<int> vars;
  std::set_union(a.vars().begin(), a.vars().end(), b.vars().begin(), b.vars().end(), std::back_inserter(vars));
  std::vector<int> cards;
  cards.reserve(vars.size());
  for (int v : vars) cards.push_back(a.contains(v) ? a.card_of(v) : b.card_of(v));
  const auto sa = detail::strides_in(a, vars);
  const auto sb = detail::strides_in(b, vars);
  std::size_t total = 1;
  for (int c : cards) total *= static_cast<std::size_t>(c);
  std::vector<double> out(total);
  std::vector<int> assign(vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    out[flat] = a.values()[ia] * b.values()[ib];
    for (std::size_t i = vars.size(); i-- > 0;) {
      if (++assign[i] < cards[i]) {
        ia += sa[i];
        ib += sb[i];
        break;
      }
      ia -= sa[i] * static_cast<std::size_t>(cards[i] - 1);
      ib -= sb[i] * static_cast<std::size_t>(cards[i] - 1);
      assign[i] = 0;
    }
  }
  return Factor(std::move(vars), std::move(cards), std::move(out));
}

inline Factor sum_out(const Factor& f, int var) {
  const int p = f.position(var);
  if (p < 0) return f;
  std::vector<int> vars = f.vars();
  std::vector<int> cards = f.cards();
  vars.erase(vars.begin() + p);
  cards.erase(cards.begin() + p);
  Factor out(vars, cards, std::vector<double>(f.size() / static_cast<std::size_t>(f.cards()[static_cast<std::size_t>(p)]), 0.0));
  const auto so = detail::strides_in(out, f.vars());
  detail::for_each_assignment(f.cards(), [&](std::size_t flat, const std::vector<int>& a) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a.size(); ++i) idx += so[i] * static_cast<std::size_t>(a[i]);
    out.values()[idx] += f.values()[flat];
  });
  return out;
}

// Restricts `var` to `value` and drops it from the scope.
inline Factor reduce(const Factor& f, int var, int value) {
  const int p = f.position(var);
  if (p < 0) return f;
  if (value < 0 || value >= f.cards()[static_cast<std::size_t>(p)]) throw RangeError("evidence state out of range");
  std::vector<int> vars = f.vars();
  std::vector<int> cards = f.cards();
  vars.erase(vars.begin() + p);
  cards.erase(cards.begin() + p);
  Factor out(vars, cards, std::vector<double>(f.size() / static_cast<std::size_t>(f.cards()[static_cast<std::size_t>(p)]), 0.0));
  const auto so = detail::strides_in(out, f.vars());
  detail::for_each_assignment(f.cards(), [&](std::size_t flat, const std::vector<int>& a) {
    if (a[static_cast<std::size_t>(p)] != value) return;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a.size(); ++i) idx += so[i] * static_cast<std::size_t>(a[i]);
    out.values()[idx] = f.values()[flat];
  });
  return out;
}

// Marginal of a normalized factor onto `keep` (sorted subset of its vars).
inline Factor marginal(const Factor& f, const std::vector<int>& keep) {
  Factor out = f;
  for (int v : f.vars())
    if (!std::binary_search(keep.begin(), keep.end(), v)) out = sum_out(out, v);
  return out;
}

}  // namespace llmsched::bn
