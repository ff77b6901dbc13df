#include "scopesearch/metrics.hpp"

namespace scopesearch {

double precision_at_k(const QueryRecord& record, std::size_t k) {
  if (k == 0) throw MetricsError(MetricsErrorKind::InsufficientLabels, "k must be positive");
  std::size_t seen = 0;
  std::size_t relevant = 0;
  for (const auto& key : record.results) {
    auto it = record.labels.find(key);
    if (it == record.labels.end()) continue;
    if (it->second == Label::Relevant) ++relevant;
    if (++seen == k) break;
  }
  if (seen < k) {
    throw MetricsError(MetricsErrorKind::InsufficientLabels,
                       "query " + record.query_id + " has " + std::to_string(seen) +
                           " labeled results, need " + std::to_string(k));
  }
  return 100.0 * static_cast<double>(relevant) / static_cast<double>(k);
}

double normalize_precision(double qp, double rsb, double max_rsb) {
  if (rsb == 0.0) throw MetricsError(MetricsErrorKind::DivisionByZero, "rsb must be non-zero");
  return max_rsb * qp / rsb;
}

}  // namespace scopesearch
