#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "traceguard/trace.hpp"

namespace traceguard {

inline constexpr std::size_t kFeatureCount = 51;

enum class FeatureCategory { temporal, sequence, action, data_flow };

// Canonical feature order. This order is frozen; serialization, model
// fingerprints and all reports depend on it. See docs/feature_dictionary.md
// for the formula of each entry.
const std::array<std::string_view, kFeatureCount>& feature_names();
FeatureCategory feature_category(std::size_t index);
std::string_view to_string(FeatureCategory c);

// 51 base features, optionally extended by an ordinal model code (feature 52).
struct FeatureVector {
    std::vector<double> values;  // size 51 or 52
    std::optional<int> model_code;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const FeatureVector&) const = default;
};

// Reference set of benign tool bigrams used by tool_sequence_anomaly_score.
// Supplied by the harness from training-split benign traces; when absent the
// score is 0.
using BigramSet = std::set<std::pair<std::string, std::string>>;

BigramSet collect_benign_bigrams(const std::vector<ExecutionTrace>& traces);

FeatureVector extract_features(const ExecutionTrace& trace,
                               const BigramSet* benign_reference = nullptr);

// Appends the canonical registry index as feature 52. Throws UnknownModelId
// or DimensionMismatch (already extended).
FeatureVector append_model_code(const FeatureVector& v, std::string_view model_id);

// z-score standardizer; population sigma with a 1e-12 floor.
class Standardizer {
public:
    Standardizer() = default;

    static Standardizer fit(const std::vector<FeatureVector>& vectors);

    FeatureVector transform(const FeatureVector& v) const;

    std::size_t dimension() const { return means_.size(); }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& stddevs() const { return stddevs_; }

    Standardizer(std::vector<double> means, std::vector<double> stddevs)
        : means_(std::move(means)), stddevs_(std::move(stddevs)) {}

private:
    std::vector<double> means_;
    std::vector<double> stddevs_;
};

// Feature matrix CSV: trace_id,model_id,label,<feature columns...>
std::string feature_matrix_csv(const std::vector<ExecutionTrace>& traces,
                               const std::vector<FeatureVector>& vectors);

}  // namespace traceguard
