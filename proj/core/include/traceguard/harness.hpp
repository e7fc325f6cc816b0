#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "traceguard/classifiers.hpp"
#include "traceguard/features.hpp"
#include "traceguard/metrics.hpp"
#include "traceguard/trace.hpp"

namespace traceguard {

// Stratified 80/20 split per model per class. Test size is floor(0.2 * n)
// per class; the remainder stays in training. Indices refer to the corpus
// trace vector, which is canonically ordered by trace_id.
struct ModelSplit {
    std::string model_id;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct SplitPlan {
    std::uint64_t seed = 42;
    std::vector<ModelSplit> splits;  // canonical registry order, present models only

    const ModelSplit& for_model(const std::string& model_id) const;
};

SplitPlan make_splits(const std::vector<ExecutionTrace>& corpus, std::uint64_t seed = 42);

// One fitted detector: benign-bigram reference, standardizer and classifier,
// all learned from a single training split.
struct TrainedDetector {
    std::string source;  // model id, "pooled" or "model_aware"
    bool model_aware = false;
    BigramSet reference;
    Standardizer standardizer;
    AnyModel model;
    std::uint64_t seed = 0;

    Prediction score_trace(const ExecutionTrace& trace) const;
};

// Detector bundle file: classifier container plus the standardizer and
// benign-bigram reference it was fitted with. Same versioning rules as
// the bare model container.
void save_detector(const TrainedDetector& det, const std::filesystem::path& path);
TrainedDetector load_detector(const std::filesystem::path& path);

TrainedDetector train_single_detector(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                                      const std::string& model_id, ClassifierKind kind);
TrainedDetector train_pooled_detector(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                                      ClassifierKind kind, bool model_aware);

struct DetectionMatrix {
    std::vector<std::string> models;
    std::vector<std::vector<EvalMetrics>> cells;  // [train][test]

    double diagonal_mean() const;
    double off_diagonal_mean() const;  // NaN-free: requires >= 2 models
    std::optional<double> gap() const; // absent for a single-model corpus
    double overall_mean() const;       // mean over all cells
};

DetectionMatrix run_matrix(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                           ClassifierKind kind);

enum class Strategy { single, pooled, voting, model_aware };
std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct StrategyResult {
    Strategy strategy;
    double same_model_acc = 0.0;
    double cross_model_acc = 0.0;
    double overall_acc = 0.0;
    std::optional<double> gap;
    // per-test-model breakdown on the pooled test union
    std::map<std::string, EvalMetrics> per_model;
};

StrategyResult run_strategy(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                            Strategy strategy, ClassifierKind kind,
                            const DetectionMatrix* matrix = nullptr);

struct StabilityReport {
    struct CategoryRollup {
        int total = 0;
        int stable = 0;    // CV < 0.2
        int moderate = 0;  // 0.2 <= CV < 0.8
        int unstable = 0;  // CV >= 0.8
    };
    std::vector<std::string> models;
    // cv[f]: population sigma of per-model means over |mean of means|;
    // absent when the grand mean is ~0.
    std::array<std::optional<double>, kFeatureCount> cv;
    // cohens_d[model][f] = (mu_backdoor - mu_benign) / pooled sigma
    std::map<std::string, std::array<double, kFeatureCount>> cohens_d;
    std::map<std::string, CategoryRollup> category_rollup;  // keyed by category name

    struct TopFeature {
        std::string model_id;
        std::string feature;
        double d = 0.0;
    };
    std::vector<TopFeature> top_discriminative;  // one per model, by |d|
};

StabilityReport feature_stability(const std::vector<ExecutionTrace>& corpus);

struct ExperimentResults {
    std::uint64_t seed = 42;
    ClassifierKind kind = ClassifierKind::forest;
    std::string corpus_manifest_hash;
    DetectionMatrix matrix;
    std::vector<StrategyResult> strategies;
    StabilityReport stability;
    std::map<std::string, std::pair<int, int>> dataset_counts;  // model -> (benign, backdoor)
};

ExperimentResults run_experiment(const std::vector<ExecutionTrace>& corpus,
                                 const std::string& manifest_hash, std::uint64_t seed,
                                 ClassifierKind kind, const std::vector<Strategy>& strategies);

// Writes matrix.csv, matrix.txt, strategies.csv, stability.csv, cohens_d.csv,
// precision_recall.csv, dataset_summary.csv and manifest.json under outdir.
// Every table carries the corpus manifest hash; writes are atomic.
void emit_reports(const ExperimentResults& results, const std::filesystem::path& outdir);

}  // namespace traceguard
