#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "traceguard/features.hpp"

namespace traceguard {

struct Prediction {
    double score = 0.0;  // forest: backdoor vote fraction; svm: signed margin
    bool backdoor = false;
};

struct TreeNode {
    int feature = -1;      // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_label = 0;  // 0 benign, 1 backdoor
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    int predict(const std::vector<double>& x) const;
    int depth() const;
};

// Random forest: 100 trees, Gini impurity, max depth 10, balanced class
// weights, bootstrap sampling, sqrt(d) features considered per split.
// Tie-breaking is pinned (lowest feature index, then lowest threshold) so
// training is a pure function of (X, y, seed).
class ForestModel {
public:
    static constexpr int kTreeCount = 100;
    static constexpr int kMaxDepth = 10;

    Prediction predict(const FeatureVector& v) const;
    double threshold() const { return 0.5; }

    std::size_t feature_dim() const { return feature_dim_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::uint64_t training_seed() const { return seed_; }

    ForestModel(std::vector<DecisionTree> trees, std::size_t dim, std::uint64_t seed)
        : trees_(std::move(trees)), feature_dim_(dim), seed_(seed) {}
    ForestModel() = default;

private:
    std::vector<DecisionTree> trees_;
    std::size_t feature_dim_ = 0;
    std::uint64_t seed_ = 0;
};

// Linear SVM: L2-regularized hinge loss, C = 1.0, balanced class weights,
// deterministic full-batch subgradient descent with a fixed schedule.
class SvmModel {
public:
    static constexpr double kC = 1.0;
    static constexpr int kMaxIterations = 3000;
    static constexpr double kTolerance = 1e-10;

    Prediction predict(const FeatureVector& v) const;
    double threshold() const { return 0.0; }

    std::size_t feature_dim() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }
    std::uint64_t training_seed() const { return seed_; }

    SvmModel(std::vector<double> weights, double bias, std::uint64_t seed)
        : weights_(std::move(weights)), bias_(bias), seed_(seed) {}
    SvmModel() = default;

private:
    std::vector<double> weights_;
    double bias_ = 0.0;
    std::uint64_t seed_ = 0;
};

ForestModel train_forest(const std::vector<FeatureVector>& X, const std::vector<bool>& is_backdoor,
                         std::uint64_t seed);
SvmModel train_svm(const std::vector<FeatureVector>& X, const std::vector<bool>& is_backdoor,
                   std::uint64_t seed);

enum class ClassifierKind { forest, svm };
std::string_view to_string(ClassifierKind k);

using AnyModel = std::variant<ForestModel, SvmModel>;

Prediction predict_any(const AnyModel& model, const FeatureVector& v);
std::size_t model_dim(const AnyModel& model);
double model_threshold(const AnyModel& model);

// Versioned JSON container with a feature-order fingerprint; load refuses
// models whose fingerprint does not match this build's feature order.
void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

// Same container as a string (what save_model writes, byte for byte).
std::string model_to_string(const AnyModel& model);
AnyModel model_from_string(const std::string& text);

}  // namespace traceguard
