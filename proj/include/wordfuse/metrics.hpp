#pragma once

#include <vector>

#include <json.hpp>

namespace wordfuse {

// confusion[true][predicted]
using Confusion = std::vector<std::vector<std::size_t>>;

struct Metrics {
  Confusion confusion;
  std::size_t total = 0;
  double wa = 0.0;           // trace / total
  double ua = 0.0;           // mean recall over classes present in the data
  double weighted_f1 = 0.0;  // Σ_c support_c / total · F1_c

  static Metrics from_confusion(const Confusion& confusion);
  nlohmann::json to_json() const;
};

Metrics compute_metrics(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                        std::size_t classes);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};
MetricSummary summarize(const std::vector<double>& values);

}  // namespace wordfuse
