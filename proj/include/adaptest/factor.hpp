#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adaptest {

// Observed state index per variable id. At most one assignment per variable.
class Evidence {
 public:
  Evidence() = default;
  Evidence(std::initializer_list<std::pair<const std::string, std::size_t>> init)
      : assignments_(init) {}

  // Throws StructuralError if `id` already has an assignment.
  void set(const std::string& id, std::size_t state);
  Evidence with(const std::string& id, std::size_t state) const;

  bool contains(const std::string& id) const { return assignments_.count(id) != 0; }
  std::optional<std::size_t> get(const std::string& id) const;
  std::size_t size() const { return assignments_.size(); }
  bool empty() const { return assignments_.empty(); }

  const std::map<std::string, std::size_t>& assignments() const { return assignments_; }
  auto begin() const { return assignments_.begin(); }
  auto end() const { return assignments_.end(); }

  friend bool operator==(const Evidence&, const Evidence&) = default;

 private:
  std::map<std::string, std::size_t> assignments_;
};

// Non-negative table over the joint states of an ordered variable tuple.
// Layout is row-major over the scope's state indices: the last scope
// variable varies fastest.
class Factor {
 public:
  // Scalar factor with value 1.
  Factor();
  Factor(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
         std::vector<double> table);

  static Factor scalar(double value);

  const std::vector<std::string>& scope() const { return scope_; }
  const std::vector<std::size_t>& cardinalities() const { return cards_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t size() const { return table_.size(); }
  bool is_scalar() const { return scope_.empty(); }

  std::optional<std::size_t> position(const std::string& id) const;
  bool contains(const std::string& id) const { return position(id).has_value(); }
  std::size_t cardinality(const std::string& id) const;

  double operator[](std::size_t flat) const { return table_[flat]; }
  // Value at a full assignment given in scope order.
  double at(std::span<const std::size_t> states) const;
  std::size_t flat_index(std::span<const std::size_t> states) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  double sum() const;
  // Divides by the total mass. Throws InconsistentEvidenceError on zero mass.
  Factor normalized() const;
  // Same function with the scope permuted into `order` (a permutation of scope()).
  Factor reordered(const std::vector<std::string>& order) const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  std::vector<std::string> scope_;
  std::vector<std::size_t> cards_;
  std::vector<double> table_;
};

// Scope is a's scope followed by b's variables not in a.
Factor factor_product(const Factor& a, const Factor& b);
Factor factor_marginalize(const Factor& f, const std::string& var);
// Keeps the slice consistent with `e`; evidenced variables leave the scope.
// No renormalization.
Factor factor_reduce(const Factor& f, const Evidence& e);

// Largest absolute entrywise difference after aligning b's scope to a's.
// Throws StructuralError if the scopes differ as sets.
double max_abs_difference(const Factor& a, const Factor& b);

}  // namespace adaptest
