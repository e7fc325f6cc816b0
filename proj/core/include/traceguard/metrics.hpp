#pragma once

#include <optional>
#include <vector>

namespace traceguard {

struct EvalMetrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc_roc;  // absent when only one class is present

    long total() const { return tp + fp + tn + fn; }
};

// Positive class = backdoor. Predicted label is score > threshold; a score
// exactly at the threshold counts as benign. AUC uses the Mann-Whitney rank
// statistic with ties counted as 1/2.
EvalMetrics compute_metrics(const std::vector<double>& scores, const std::vector<bool>& is_backdoor,
                            double threshold);

// Rank-statistic AUC on its own; nullopt when a class is missing.
std::optional<double> auc_mann_whitney(const std::vector<double>& scores,
                                       const std::vector<bool>& is_backdoor);

}  // namespace traceguard
