#pragma once

#include <stdexcept>
#include <string>

namespace ssm {

// Enumeration/atom budgets are a resource condition, not a logic error;
// the CLI maps this to its own exit code.
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Default absolute tolerance for declaring two atoms equal. The underlying
// constructions never discretize; a finite implementation has to.
inline constexpr double kAtomTolerance = 1e-9;

inline constexpr std::size_t kDefaultAtomBudget = 1'000'000;

}  // namespace ssm
