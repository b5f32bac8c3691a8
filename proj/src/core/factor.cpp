#include "adaptest/factor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "adaptest/errors.hpp"

namespace adaptest {

void Evidence::set(const std::string& id, std::size_t state) {
  if (!assignments_.emplace(id, state).second) {
    throw StructuralError("evidence already assigns variable '" + id + "'");
  }
}

Evidence Evidence::with(const std::string& id, std::size_t state) const {
  Evidence out = *this;
  out.set(id, state);
  return out;
}

std::optional<std::size_t> Evidence::get(const std::string& id) const {
  auto it = assignments_.find(id);
  if (it == assignments_.end()) return std::nullopt;
  return it->second;
}

Factor::Factor() : table_{1.0} {}

Factor::Factor(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
               std::vector<double> table)
    : scope_(std::move(scope)), cards_(std::move(cardinalities)), table_(std::move(table)) {
  if (scope_.size() != cards_.size()) {
    throw StructuralError("factor scope and cardinality lists differ in length");
  }
  std::size_t expected = 1;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (cards_[i] == 0) throw StructuralError("variable '" + scope_[i] + "' has cardinality 0");
    for (std::size_t j = 0; j < i; ++j) {
      if (scope_[j] == scope_[i]) {
        throw StructuralError("variable '" + scope_[i] + "' repeated in factor scope");
      }
    }
    expected *= cards_[i];
  }
  if (table_.size() != expected) {
    throw StructuralError("factor table has " + std::to_string(table_.size()) +
                          " entries, scope requires " + std::to_string(expected));
  }
  for (double v : table_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw StructuralError("factor entries must be finite and non-negative");
    }
  }
}

Factor Factor::scalar(double value) { return Factor({}, {}, {value}); }

std::optional<std::size_t> Factor::position(const std::string& id) const {
  auto it = std::find(scope_.begin(), scope_.end(), id);
  if (it == scope_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - scope_.begin());
}

std::size_t Factor::cardinality(const std::string& id) const {
  auto pos = position(id);
  if (!pos) throw StructuralError("variable '" + id + "' not in factor scope");
  return cards_[*pos];
}

std::size_t Factor::flat_index(std::span<const std::size_t> states) const {
  if (states.size() != scope_.size()) {
    throw StructuralError("assignment length does not match factor scope");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] >= cards_[i]) {
      throw StructuralError("state index out of range for '" + scope_[i] + "'");
    }
    flat = flat * cards_[i] + states[i];
  }
  return flat;
}

double Factor::at(std::span<const std::size_t> states) const { return table_[flat_index(states)]; }

std::vector<std::size_t> Factor::unflatten(std::size_t flat) const {
  std::vector<std::size_t> states(scope_.size());
  for (std::size_t i = scope_.size(); i-- > 0;) {
    states[i] = flat % cards_[i];
    flat /= cards_[i];
  }
  return states;
}

double Factor::sum() const { return std::accumulate(table_.begin(), table_.end(), 0.0); }

Factor Factor::normalized() const {
  const double total = sum();
  if (!(total > 0.0)) throw InconsistentEvidenceError("cannot normalize a factor with zero mass");
  std::vector<double> out(table_.size());
  std::transform(table_.begin(), table_.end(), out.begin(), [total](double v) { return v / total; });
  return Factor(scope_, cards_, std::move(out));
}

namespace {

// Row-major strides of `f` expressed along the variables of `order`; a variable
// absent from f gets stride 0.
std::vector<std::size_t> strides_along(const Factor& f, const std::vector<std::string>& order) {
  std::vector<std::size_t> own(f.scope().size());
  std::size_t stride = 1;
  for (std::size_t i = own.size(); i-- > 0;) {
    own[i] = stride;
    stride *= f.cardinalities()[i];
  }
  std::vector<std::size_t> out(order.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (auto pos = f.position(order[k])) out[k] = own[*pos];
  }
  return out;
}

// Walks every joint state of `cards` in row-major order, calling fn with the
// flat offsets into each strided source.
template <std::size_t N, typename Fn>
void for_each_joint(const std::vector<std::size_t>& cards,
                    const std::array<std::vector<std::size_t>, N>& strides, Fn&& fn) {
  std::size_t total = 1;
  for (auto c : cards) total *= c;
  std::vector<std::size_t> counter(cards.size(), 0);
  std::array<std::size_t, N> offsets{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, offsets);
    for (std::size_t i = cards.size(); i-- > 0;) {
      ++counter[i];
      for (std::size_t s = 0; s < N; ++s) offsets[s] += strides[s][i];
      if (counter[i] < cards[i]) break;
      for (std::size_t s = 0; s < N; ++s) offsets[s] -= strides[s][i] * cards[i];
      counter[i] = 0;
    }
  }
}

}  // namespace

Factor Factor::reordered(const std::vector<std::string>& order) const {
  if (order.size() != scope_.size()) {
    throw StructuralError("reorder target is not a permutation of the factor scope");
  }
  std::vector<std::size_t> cards(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) cards[k] = cardinality(order[k]);
  std::vector<double> out(table_.size());
  std::array<std::vector<std::size_t>, 1> strides{strides_along(*this, order)};
  for_each_joint(cards, strides,
                 [&](std::size_t flat, const auto& off) { out[flat] = table_[off[0]]; });
  return Factor(order, std::move(cards), std::move(out));
}

Factor factor_product(const Factor& a, const Factor& b) {
  std::vector<std::string> scope = a.scope();
  std::vector<std::size_t> cards = a.cardinalities();
  for (std::size_t i = 0; i < b.scope().size(); ++i) {
    const auto& id = b.scope()[i];
    if (auto pos = a.position(id)) {
      if (a.cardinalities()[*pos] != b.cardinalities()[i]) {
        throw StructuralError("cardinality mismatch for shared variable '" + id + "'");
      }
    } else {
      scope.push_back(id);
      cards.push_back(b.cardinalities()[i]);
    }
  }
  std::size_t total = 1;
  for (auto c : cards) total *= c;
  std::vector<double> out(total);
  std::array<std::vector<std::size_t>, 2> strides{strides_along(a, scope), strides_along(b, scope)};
  for_each_joint(cards, strides, [&](std::size_t flat, const auto& off) {
    out[flat] = a[off[0]] * b[off[1]];
  });
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_marginalize(const Factor& f, const std::string& var) {
  auto pos = f.position(var);
  if (!pos) throw StructuralError("cannot marginalize '" + var + "': not in factor scope");
  std::vector<std::string> scope = f.scope();
  std::vector<std::size_t> cards = f.cardinalities();
  scope.erase(scope.begin() + static_cast<std::ptrdiff_t>(*pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(*pos));

  std::size_t inner = 1;
  for (std::size_t i = *pos + 1; i < f.cardinalities().size(); ++i) inner *= f.cardinalities()[i];
  const std::size_t card = f.cardinalities()[*pos];
  const std::size_t outer = f.size() / (inner * card);
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < card; ++k) {
      const std::size_t base = (o * card + k) * inner;
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += f[base + i];
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_reduce(const Factor& f, const Evidence& e) {
  std::vector<std::string> scope;
  std::vector<std::size_t> cards;
  std::vector<std::size_t> kept_strides;
  std::size_t base = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> own(f.scope().size());
  for (std::size_t i = own.size(); i-- > 0;) {
    own[i] = stride;
    stride *= f.cardinalities()[i];
  }
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    const auto& id = f.scope()[i];
    if (auto state = e.get(id)) {
      if (*state >= f.cardinalities()[i]) {
        throw StructuralError("evidence state " + std::to_string(*state) + " out of range for '" +
                              id + "'");
      }
      base += *state * own[i];
    } else {
      scope.push_back(id);
      cards.push_back(f.cardinalities()[i]);
      kept_strides.push_back(own[i]);
    }
  }
  if (scope.size() == f.scope().size()) return f;

  std::size_t total = 1;
  for (auto c : cards) total *= c;
  std::vector<double> out(total);
  std::array<std::vector<std::size_t>, 1> strides{kept_strides};
  for_each_joint(cards, strides,
                 [&](std::size_t flat, const auto& off) { out[flat] = f[base + off[0]]; });
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

double max_abs_difference(const Factor& a, const Factor& b) {
  const Factor aligned = b.reordered(a.scope());
  if (aligned.cardinalities() != a.cardinalities()) {
    throw StructuralError("factors disagree on cardinalities");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - aligned[i]));
  return worst;
}

}  // namespace adaptest
