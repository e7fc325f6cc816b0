#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace traceguard {

// Closed registry of the six supported models, in canonical order.
// The index doubles as the ordinal model code used by model-aware detection.
struct ModelEntry {
    std::string_view id;
    std::string_view provider;
};

inline constexpr std::array<ModelEntry, 6> kModelRegistry = {{
    {"gpt-5.1", "openai"},
    {"claude-sonnet-4.5", "anthropic"},
    {"grok-4.1-fast", "xai"},
    {"llama-4-maverick", "meta"},
    {"gpt-oss-120b", "openai"},
    {"deepseek-chat-v3.1", "deepseek"},
}};

inline constexpr std::size_t kModelCount = kModelRegistry.size();

inline std::optional<int> model_code(std::string_view model_id) {
    for (std::size_t i = 0; i < kModelRegistry.size(); ++i)
        if (kModelRegistry[i].id == model_id) return static_cast<int>(i);
    return std::nullopt;
}

inline bool is_known_model(std::string_view model_id) { return model_code(model_id).has_value(); }

enum class TaskCategory { web_research, data_analysis, code_generation, planning };

inline constexpr std::array<std::string_view, 4> kTaskCategoryNames = {
    "web_research", "data_analysis", "code_generation", "planning"};

inline std::optional<TaskCategory> parse_task_category(std::string_view s) {
    for (std::size_t i = 0; i < kTaskCategoryNames.size(); ++i)
        if (kTaskCategoryNames[i] == s) return static_cast<TaskCategory>(i);
    return std::nullopt;
}

inline std::string_view to_string(TaskCategory t) {
    return kTaskCategoryNames[static_cast<std::size_t>(t)];
}

enum class Label { benign, backdoor };
enum class ThreatModel { none, TM1, TM2 };

inline std::string_view to_string(Label l) { return l == Label::benign ? "benign" : "backdoor"; }
inline std::string_view to_string(ThreatModel t) {
    switch (t) {
        case ThreatModel::none: return "none";
        case ThreatModel::TM1: return "TM1";
        default: return "TM2";
    }
}

inline std::optional<Label> parse_label(std::string_view s) {
    if (s == "benign") return Label::benign;
    if (s == "backdoor") return Label::backdoor;
    return std::nullopt;
}

inline std::optional<ThreatModel> parse_threat_model(std::string_view s) {
    if (s == "none") return ThreatModel::none;
    if (s == "TM1") return ThreatModel::TM1;
    if (s == "TM2") return ThreatModel::TM2;
    return std::nullopt;
}

}  // namespace traceguard
