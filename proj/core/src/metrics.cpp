#include "traceguard/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "traceguard/errors.hpp"

namespace traceguard {

std::optional<double> auc_mann_whitney(const std::vector<double>& scores,
                                       const std::vector<bool>& is_backdoor) {
    if (scores.size() != is_backdoor.size()) throw DimensionMismatch("scores/labels length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : is_backdoor) n_pos += b ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups; rank sum of positives gives the U statistic
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (is_backdoor[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalMetrics compute_metrics(const std::vector<double>& scores, const std::vector<bool>& is_backdoor,
                            double threshold) {
    if (scores.size() != is_backdoor.size()) throw DimensionMismatch("scores/labels length mismatch");
    if (scores.empty()) throw InsufficientData("compute_metrics needs at least one sample");

    EvalMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool predicted = scores[i] > threshold;
        if (predicted && is_backdoor[i]) ++m.tp;
        else if (predicted && !is_backdoor[i]) ++m.fp;
        else if (!predicted && is_backdoor[i]) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.auc_roc = auc_mann_whitney(scores, is_backdoor);
    return m;
}

}  // namespace traceguard
