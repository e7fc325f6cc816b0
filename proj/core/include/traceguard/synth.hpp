#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "traceguard/features.hpp"
#include "traceguard/trace.hpp"

namespace traceguard {

struct LognormalParams {
    double mu = 0.0;
    double sigma = 1.0;

    double mean() const;  // exp(mu + sigma^2/2)
    static LognormalParams from_mean(double mean, double sigma);
    bool operator==(const LognormalParams&) const = default;
};

struct WeightedTool {
    std::string name;
    double weight = 1.0;
    bool operator==(const WeightedTool&) const = default;
};

// Behavioral profile of one model: timing, tool mix, shape of generated
// traces. The six shipped defaults carry deliberately heterogeneous timing
// parameters; everything structural (tool mix, lengths, dependency rates)
// is shared so sequence statistics stay comparable across models.
struct ModelProfile {
    std::string model_id;
    LognormalParams duration_lognormal;  // per-step duration, seconds
    LognormalParams delay_lognormal;     // inter-step delay, seconds
    std::vector<WeightedTool> tool_vocabulary;
    int seq_length_min = 8;
    int seq_length_max = 28;
    LognormalParams io_size_lognormal;  // bytes, inputs and outputs alike
    double loop_prob = 0.15;
    double dependency_prob = 0.3;

    // Expected invocations of `tool` in a benign trace of mean length.
    double expected_tool_count(const std::string& tool) const;
    double mean_seq_length() const { return 0.5 * (seq_length_min + seq_length_max); }

    void validate() const;  // throws InvariantViolation
    bool operator==(const ModelProfile&) const = default;
};

struct AttackConfig {
    ThreatModel threat_model = ThreatModel::TM1;
    double trigger_rate = 0.35;
    double tm1_file_read_target = 12.3;    // mean file_read invocations
    double tm1_max_output_target = 18432;  // bytes
    double tm2_io_ratio_target = 3.2;      // mean per-trace avg io ratio
    double tm2_max_duration_target = 12.3; // seconds
    double sensitive_hit_rate = 12.0;      // mean sensitive mentions per trace

    // Throws TargetsBelowBenignMean if any target does not strictly exceed
    // the benign mean implied by the profile, or trigger_rate is degenerate.
    void validate_against(const ModelProfile& profile) const;
};

// The six shipped default profiles, canonical registry order.
std::vector<ModelProfile> default_profiles();
AttackConfig default_attack(ThreatModel tm);

// Profile config file I/O (JSON, documented key set).
std::vector<ModelProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(const std::vector<ModelProfile>& profiles, const std::filesystem::path& path);
AttackConfig load_attack_config(const std::filesystem::path& path, ThreatModel tm);
void save_attack_configs(const AttackConfig& tm1, const AttackConfig& tm2,
                         const std::filesystem::path& path);

ExecutionTrace generate_benign(const ModelProfile& profile, TaskCategory task, std::uint64_t seed);

// Returns a new backdoor trace; the input trace is untouched.
ExecutionTrace inject_backdoor(const ExecutionTrace& trace, const ModelProfile& profile,
                               const AttackConfig& attack, std::uint64_t seed);

// Per-feature benign population statistics for one model.
struct BenignStats {
    std::size_t trace_count = 0;
    std::vector<double> means;    // 51 entries
    std::vector<double> stddevs;  // population sigma
};

BenignStats compute_benign_stats(const std::vector<ExecutionTrace>& benign_traces);

struct ValidationVerdict {
    bool trigger_present = false;
    bool malicious_action_present = false;
    std::vector<std::string> deviating_features;  // |x - mean| > 1 sigma

    bool passes() const {
        return trigger_present && malicious_action_present && deviating_features.size() >= 2;
    }
};

// Throws InsufficientBenignStats when stats cover < 30 traces.
ValidationVerdict validate_backdoor(const ExecutionTrace& backdoor, const BenignStats& stats);

struct CorpusSpec {
    // model_id -> (benign count, backdoor count); defaults to Table-style
    // 100/100 per model with 99/99 for the last registry entry.
    std::map<std::string, std::pair<int, int>> per_model_counts;
    double tm1_fraction = 0.5;
    std::uint64_t master_seed = 42;

    static CorpusSpec defaults(std::uint64_t seed = 42);
    static CorpusSpec uniform(int benign, int backdoor, std::uint64_t seed = 42);
};

struct CorpusManifest {
    std::uint64_t master_seed = 0;
    std::map<std::string, std::pair<int, int>> per_model_counts;
    std::map<std::string, int> validation_retries;  // per model
    int total_traces = 0;
    std::string to_json() const;
};

// Generates the full corpus under out_dir using the trace_model file layout
// (<model_id>/<trace_id>.json) plus manifest.json. Every backdoor trace
// passes validate_backdoor, regenerating with fresh sub-seeds up to 10
// attempts. Throws ValidationExhausted after 10 failures on one slot.
CorpusManifest generate_corpus(const CorpusSpec& spec, const std::vector<ModelProfile>& profiles,
                               const std::filesystem::path& out_dir,
                               const AttackConfig* tm1_override = nullptr,
                               const AttackConfig* tm2_override = nullptr);

// FNV-1a fingerprint of a corpus' manifest.json, carried by every report.
std::string corpus_manifest_hash(const std::filesystem::path& corpus_dir);

}  // namespace traceguard
