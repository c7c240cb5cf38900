#include "wordfuse/metrics.hpp"

#include <cmath>

#include "wordfuse/error.hpp"

namespace wordfuse {

Metrics Metrics::from_confusion(const Confusion& confusion) {
  const std::size_t C = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != C) fail(ErrorKind::kDimension, "confusion matrix must be square");
  Metrics m;
  m.confusion = confusion;
  std::vector<std::size_t> support(C, 0), predicted(C, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      support[i] += confusion[i][j];
      predicted[j] += confusion[i][j];
      m.total += confusion[i][j];
    }
    correct += confusion[i][i];
  }
  if (m.total == 0) return m;
  m.wa = static_cast<double>(correct) / static_cast<double>(m.total);
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < C; ++c) {
    if (support[c] == 0) continue;
    const double recall = static_cast<double>(confusion[c][c]) / static_cast<double>(support[c]);
    const double precision =
        predicted[c] ? static_cast<double>(confusion[c][c]) / static_cast<double>(predicted[c]) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    recall_sum += recall;
    ++present;
    m.weighted_f1 += static_cast<double>(support[c]) / static_cast<double>(m.total) * f1;
  }
  m.ua = recall_sum / static_cast<double>(present);
  return m;
}

nlohmann::json Metrics::to_json() const {
  return {{"wa", wa}, {"ua", ua}, {"weighted_f1", weighted_f1}, {"total", total}, {"confusion", confusion}};
}

Metrics compute_metrics(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                        std::size_t classes) {
  if (truth.size() != predicted.size()) fail(ErrorKind::kDimension, "truth and prediction counts differ");
  Confusion c(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) fail(ErrorKind::kInput, "label outside the class range");
    ++c[truth[i]][predicted[i]];
  }
  return Metrics::from_confusion(c);
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(values.size()));
  return s;
}

}  // namespace wordfuse
