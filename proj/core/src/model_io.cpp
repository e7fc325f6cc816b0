#include <fstream>
#include <sstream>

#include <json.hpp>

#include "traceguard/classifiers.hpp"
#include "traceguard/errors.hpp"
#include "traceguard/rng.hpp"
#include "traceguard/trace_io.hpp"

namespace traceguard {
namespace {

using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

// Fingerprint of the feature order this build scores with; 52-dim models
// append the model-code slot.
std::string feature_fingerprint(std::size_t dim) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto name : feature_names()) {
        h = fnv1a64(name, h);
        h = fnv1a64("|", h);
    }
    if (dim == kFeatureCount + 1) h = fnv1a64("model_code|", h);
    h = fnv1a64_u64(dim, h);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace

std::string_view to_string(ClassifierKind k) { return k == ClassifierKind::forest ? "forest" : "svm"; }

Prediction predict_any(const AnyModel& model, const FeatureVector& v) {
    return std::visit([&](const auto& m) { return m.predict(v); }, model);
}

std::size_t model_dim(const AnyModel& model) {
    return std::visit([](const auto& m) { return m.feature_dim(); }, model);
}

double model_threshold(const AnyModel& model) {
    return std::visit([](const auto& m) { return m.threshold(); }, model);
}

std::string model_to_string(const AnyModel& model) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["feature_dim"] = model_dim(model);
    j["feature_fingerprint"] = feature_fingerprint(model_dim(model));
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        j["kind"] = "forest";
        j["seed"] = forest->training_seed();
        ordered_json trees = ordered_json::array();
        for (const auto& tree : forest->trees()) {
            ordered_json nodes = ordered_json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back(ordered_json::array({n.feature, n.threshold, n.left, n.right, n.leaf_label}));
            trees.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees);
    } else {
        const auto& svm = std::get<SvmModel>(model);
        j["kind"] = "svm";
        j["seed"] = svm.training_seed();
        j["weights"] = svm.weights();
        j["bias"] = svm.bias();
    }
    return j.dump() + "\n";
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
    atomic_write_file(path, model_to_string(model));
}

AnyModel model_from_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("model file: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw VersionMismatch("unsupported model format version");
        std::size_t dim = j.at("feature_dim").get<std::size_t>();
        if (j.at("feature_fingerprint").get<std::string>() != feature_fingerprint(dim))
            throw VersionMismatch("feature-order fingerprint mismatch");
        std::string kind = j.at("kind").get<std::string>();
        std::uint64_t seed = j.at("seed").get<std::uint64_t>();
        if (kind == "forest") {
            std::vector<DecisionTree> trees;
            for (const auto& tj : j.at("trees")) {
                DecisionTree tree;
                for (const auto& nj : tj) {
                    TreeNode n;
                    n.feature = nj.at(0).get<int>();
                    n.threshold = nj.at(1).get<double>();
                    n.left = nj.at(2).get<int>();
                    n.right = nj.at(3).get<int>();
                    n.leaf_label = nj.at(4).get<int>();
                    tree.nodes.push_back(n);
                }
                if (tree.nodes.empty()) throw MalformedModel("empty tree");
                trees.push_back(std::move(tree));
            }
            return ForestModel(std::move(trees), dim, seed);
        }
        if (kind == "svm") {
            auto weights = j.at("weights").get<std::vector<double>>();
            if (weights.size() != dim) throw MalformedModel("weight dimension mismatch");
            return SvmModel(std::move(weights), j.at("bias").get<double>(), seed);
        }
        throw MalformedModel("unknown model kind: " + kind);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("model file: ") + e.what());
    }
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open model file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_string(ss.str());
}

}  // namespace traceguard
