#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace charlab {

// Base class for all library errors. Subclasses carry structured payloads
// where a caller can act on them (e.g. the violating vector of a failed
// independence precheck).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotPrimeError : public Error {
public:
  explicit NotPrimeError(long long n)
      : Error("not a prime: " + std::to_string(n)), value(n) {}
  long long value;
};

class NotIrreducibleError : public Error {
public:
  explicit NotIrreducibleError(const std::string& what) : Error(what) {}
};

class CapExceededError : public Error {
public:
  CapExceededError(unsigned long long q, unsigned long long cap)
      : Error("field size " + std::to_string(q) + " exceeds cap " +
              std::to_string(cap)),
        q(q), cap(cap) {}
  unsigned long long q;
  unsigned long long cap;
};

class DivisionByZeroError : public Error {
public:
  DivisionByZeroError() : Error("division by zero") {}
};

class ZeroArgumentError : public Error {
public:
  ZeroArgumentError() : Error("discrete log of zero") {}
};

class SyntaxError : public Error {
public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& msg)
      : Error("syntax error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + msg),
        line(line), column(column) {}
  std::size_t line;
  std::size_t column;
};

class ArityMismatchError : public Error {
public:
  explicit ArityMismatchError(const std::string& what) : Error(what) {}
};

class BudgetExceededError : public Error {
public:
  BudgetExceededError(unsigned long long needed, unsigned long long budget)
      : Error("enumeration needs " + std::to_string(needed) +
              " candidate evaluations, budget is " + std::to_string(budget)),
        needed(needed), budget(budget) {}
  unsigned long long needed;
  unsigned long long budget;
};

class FiberBoundExceededError : public Error {
public:
  explicit FiberBoundExceededError(const std::string& what) : Error(what) {}
};

class InvalidPaddingError : public Error {
public:
  explicit InvalidPaddingError(const std::string& what) : Error(what) {}
};

class OrderTooLargeError : public Error {
public:
  OrderTooLargeError(long long order, long long bound)
      : Error("character order " + std::to_string(order) +
              " exceeds decomposition bound " + std::to_string(bound)),
        order(order), bound(bound) {}
  long long order;
  long long bound;
};

class InconsistentDimensionError : public Error {
public:
  explicit InconsistentDimensionError(double spread)
      : Error("per-prime dimension slopes disagree by " +
              std::to_string(spread) +
              "; the family straddles partition cells"),
        spread(spread) {}
  double spread;
};

class NoPrimesFoundError : public Error {
public:
  explicit NoPrimesFoundError(const std::string& what) : Error(what) {}
};

class IndependencePrecheckFailedError : public Error {
public:
  explicit IndependencePrecheckFailedError(std::vector<long long> alpha)
      : Error("angles satisfy an integral relation"), alpha(std::move(alpha)) {}
  std::vector<long long> alpha;
};

class NotRealValuedError : public Error {
public:
  NotRealValuedError() : Error("Laurent polynomial is not real-valued on the torus") {}
};

class HasConstantTermError : public Error {
public:
  HasConstantTermError() : Error("Laurent polynomial has a constant term") {}
};

class UnresolvedReferenceError : public Error {
public:
  UnresolvedReferenceError(const std::string& kind, int id)
      : Error("unresolved " + kind + " reference #" + std::to_string(id)) {}
};

}  // namespace charlab
