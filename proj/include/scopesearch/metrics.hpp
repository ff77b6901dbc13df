#pragma once

// Evaluation formulas used by the experiments.

#include <cstddef>
#include <stdexcept>
#include <string>

#include "scopesearch/store.hpp"

namespace scopesearch {

enum class MetricsErrorKind { InsufficientLabels, DivisionByZero };

class MetricsError : public std::invalid_argument {
 public:
  MetricsError(MetricsErrorKind kind, const std::string& message)
      : std::invalid_argument(message), kind_(kind) {}
  MetricsErrorKind kind() const noexcept { return kind_; }

 private:
  MetricsErrorKind kind_;
};

/// Percentage of relevant labels among the first k labeled results, taken in
/// result order. Throws InsufficientLabels when fewer than k results carry a
/// label, or when k is 0.
double precision_at_k(const QueryRecord& record, std::size_t k = 10);

/// Background-adjusted precision max_rsb * qp / rsb.
double normalize_precision(double qp, double rsb, double max_rsb);

}  // namespace scopesearch
