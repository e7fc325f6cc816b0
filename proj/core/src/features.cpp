#include "traceguard/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "traceguard/errors.hpp"

namespace traceguard {
namespace {

constexpr double kEps = 1e-9;

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double max_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return *std::max_element(xs.begin(), xs.end());
}

// Population standard deviation.
double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Shannon entropy (natural log) of a count distribution.
template <typename Map>
double count_entropy(const Map& counts) {
    double total = 0.0;
    for (const auto& [k, c] : counts) total += static_cast<double>(c);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (const auto& [k, c] : counts) {
        double p = static_cast<double>(c) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Entropy of values binned into 10 equal-width bins over the observed range.
double histogram_entropy(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double lo = *std::min_element(xs.begin(), xs.end());
    double hi = *std::max_element(xs.begin(), xs.end());
    if (hi <= lo) return 0.0;
    constexpr int kBins = 10;
    std::array<int, kBins> bins{};
    for (double x : xs) {
        int b = static_cast<int>((x - lo) / (hi - lo) * kBins);
        bins[std::min(b, kBins - 1)]++;
    }
    std::map<int, int> counts;
    for (int i = 0; i < kBins; ++i)
        if (bins[i] > 0) counts[i] = bins[i];
    return count_entropy(counts);
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2) return 0.0;
    double mx = mean_of(xs), my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;  // constant sequence
    return sxy / std::sqrt(sxx * syy);
}

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    // temporal (10)
    "avg_duration", "max_duration", "std_duration", "avg_delay", "max_delay",
    "total_duration", "execution_rate", "timing_entropy", "has_burst", "burst_intensity",
    // sequence (15)
    "unique_bigrams", "max_bigram_freq", "bigram_diversity", "unique_trigrams",
    "trigram_diversity", "repetition_ratio", "max_consecutive_repeats", "sequence_length",
    "unique_transitions", "transition_entropy", "has_loops", "loop_count",
    "dependency_ratio", "total_dependencies", "rare_tool_ratio",
    // action (12)
    "tool_count", "unique_tools", "tool_diversity", "most_common_tool_freq",
    "tool_transition_entropy", "file_read_count", "web_fetch_count", "tool_switching_rate",
    "unauthorized_tool_access", "tool_sequence_anomaly_score", "avg_params_length",
    "max_params_length",
    // data_flow (14)
    "avg_input_size", "max_input_size", "std_input_size", "avg_output_size",
    "max_output_size", "std_output_size", "avg_io_ratio", "max_io_ratio",
    "input_diversity", "output_diversity", "io_entropy", "io_coupling",
    "sensitive_data_mentions", "data_flow_complexity"};

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kFeatureNames; }

FeatureCategory feature_category(std::size_t index) {
    if (index < 10) return FeatureCategory::temporal;
    if (index < 25) return FeatureCategory::sequence;
    if (index < 37) return FeatureCategory::action;
    return FeatureCategory::data_flow;
}

std::string_view to_string(FeatureCategory c) {
    switch (c) {
        case FeatureCategory::temporal: return "temporal";
        case FeatureCategory::sequence: return "sequence";
        case FeatureCategory::action: return "action";
        default: return "data_flow";
    }
}

BigramSet collect_benign_bigrams(const std::vector<ExecutionTrace>& traces) {
    BigramSet set;
    for (const auto& t : traces) {
        if (t.metadata.label != Label::benign) continue;
        for (std::size_t i = 1; i < t.steps.size(); ++i)
            set.emplace(t.steps[i - 1].tool, t.steps[i].tool);
    }
    return set;
}

FeatureVector extract_features(const ExecutionTrace& trace, const BigramSet* benign_reference) {
    const auto& steps = trace.steps;
    const std::size_t n = steps.size();

    std::vector<double> durations, delays, inputs, outputs, ratios, params;
    durations.reserve(n);
    for (const auto& s : steps) {
        durations.push_back(s.end_time - s.start_time);
        inputs.push_back(static_cast<double>(s.input_size));
        outputs.push_back(static_cast<double>(s.output_size));
        ratios.push_back(static_cast<double>(s.output_size) /
                         std::max<double>(static_cast<double>(s.input_size), 1.0));
        params.push_back(static_cast<double>(s.params_length));
    }
    for (std::size_t i = 1; i < n; ++i)
        delays.push_back(std::max(0.0, steps[i].start_time - steps[i - 1].end_time));

    FeatureVector fv;
    fv.values.assign(kFeatureCount, 0.0);
    auto& v = fv.values;

    // --- temporal ---
    v[0] = mean_of(durations);
    v[1] = max_of(durations);
    v[2] = std_of(durations);
    v[3] = mean_of(delays);
    v[4] = max_of(delays);
    double total_dur = trace.total_duration();
    v[5] = total_dur;
    v[6] = static_cast<double>(n) / std::max(total_dur, kEps);
    v[7] = histogram_entropy(delays);
    // burst: any window of 3 consecutive delays with mean < 0.25x overall mean
    double mean_delay = mean_of(delays);
    double min_window = -1.0;
    if (delays.size() >= 3 && mean_delay > 0.0) {
        for (std::size_t i = 0; i + 3 <= delays.size(); ++i) {
            double w = (delays[i] + delays[i + 1] + delays[i + 2]) / 3.0;
            if (min_window < 0.0 || w < min_window) min_window = w;
        }
    }
    bool has_burst = min_window >= 0.0 && min_window < 0.25 * mean_delay;
    v[8] = has_burst ? 1.0 : 0.0;
    v[9] = has_burst ? mean_delay / std::max(min_window, kEps) : 0.0;

    // --- sequence ---
    std::map<std::pair<std::string, std::string>, int> bigrams;
    std::map<std::array<std::string, 3>, int> trigrams;
    for (std::size_t i = 1; i < n; ++i) bigrams[{steps[i - 1].tool, steps[i].tool}]++;
    for (std::size_t i = 2; i < n; ++i)
        trigrams[{steps[i - 2].tool, steps[i - 1].tool, steps[i].tool}]++;
    double total_bigrams = n >= 2 ? static_cast<double>(n - 1) : 0.0;

    v[10] = static_cast<double>(bigrams.size());
    int max_bigram = 0;
    for (const auto& [k, c] : bigrams) max_bigram = std::max(max_bigram, c);
    v[11] = total_bigrams > 0 ? static_cast<double>(max_bigram) / total_bigrams : 0.0;
    v[12] = count_entropy(bigrams);
    v[13] = static_cast<double>(trigrams.size());
    v[14] = count_entropy(trigrams);
    v[15] = total_bigrams > 0 ? 1.0 - static_cast<double>(bigrams.size()) / total_bigrams : 0.0;
    int max_run = 1, run = 1;
    for (std::size_t i = 1; i < n; ++i) {
        run = steps[i].tool == steps[i - 1].tool ? run + 1 : 1;
        max_run = std::max(max_run, run);
    }
    v[16] = static_cast<double>(max_run);
    v[17] = static_cast<double>(n);
    v[18] = static_cast<double>(bigrams.size());  // distinct ordered tool pairs
    v[19] = count_entropy(bigrams);               // transition distribution entropy
    // loops: revisit of a tool after >= 2 intervening distinct tools
    int loop_count = 0;
    {
        std::map<std::string, std::size_t> last_seen;
        for (std::size_t i = 0; i < n; ++i) {
            auto it = last_seen.find(steps[i].tool);
            if (it != last_seen.end()) {
                std::set<std::string> between;
                for (std::size_t k = it->second + 1; k < i; ++k) between.insert(steps[k].tool);
                if (between.size() >= 2) ++loop_count;
            }
            last_seen[steps[i].tool] = i;
        }
    }
    v[20] = loop_count > 0 ? 1.0 : 0.0;
    v[21] = static_cast<double>(loop_count);
    int with_deps = 0, total_deps = 0;
    for (const auto& s : steps) {
        if (!s.depends_on.empty()) ++with_deps;
        total_deps += static_cast<int>(s.depends_on.size());
    }
    v[22] = static_cast<double>(with_deps) / static_cast<double>(n);
    v[23] = static_cast<double>(total_deps);
    std::map<std::string, int> tool_counts;
    for (const auto& s : steps) tool_counts[s.tool]++;
    int rare = 0;
    for (const auto& s : steps)
        if (static_cast<double>(tool_counts[s.tool]) / static_cast<double>(n) < 0.05) ++rare;
    v[24] = static_cast<double>(rare) / static_cast<double>(n);

    // --- action ---
    v[25] = static_cast<double>(n);
    v[26] = static_cast<double>(tool_counts.size());
    v[27] = static_cast<double>(tool_counts.size()) / static_cast<double>(n);
    int most_common = 0;
    for (const auto& [k, c] : tool_counts) most_common = std::max(most_common, c);
    v[28] = static_cast<double>(most_common) / static_cast<double>(n);
    v[29] = count_entropy(bigrams);  // same formula as transition_entropy, kept as its own slot
    v[30] = static_cast<double>(tool_counts.count("file_read") ? tool_counts["file_read"] : 0);
    v[31] = static_cast<double>(tool_counts.count("web_fetch") ? tool_counts["web_fetch"] : 0);
    int switches = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (steps[i].tool != steps[i - 1].tool) ++switches;
    v[32] = n >= 2 ? static_cast<double>(switches) / static_cast<double>(n - 1) : 0.0;
    int unauthorized = 0;
    for (const auto& s : steps)
        if (s.unauthorized) ++unauthorized;
    v[33] = static_cast<double>(unauthorized);
    if (benign_reference != nullptr && !benign_reference->empty() && total_bigrams > 0) {
        double known = 0.0;
        for (std::size_t i = 1; i < n; ++i)
            if (benign_reference->count({steps[i - 1].tool, steps[i].tool})) known += 1.0;
        v[34] = 1.0 - known / total_bigrams;
    } else {
        v[34] = 0.0;
    }
    v[35] = mean_of(params);
    v[36] = max_of(params);

    // --- data_flow ---
    v[37] = mean_of(inputs);
    v[38] = max_of(inputs);
    v[39] = std_of(inputs);
    v[40] = mean_of(outputs);
    v[41] = max_of(outputs);
    v[42] = std_of(outputs);
    v[43] = mean_of(ratios);
    v[44] = max_of(ratios);
    std::set<double> in_set(inputs.begin(), inputs.end());
    std::set<double> out_set(outputs.begin(), outputs.end());
    v[45] = static_cast<double>(in_set.size()) / static_cast<double>(n);
    v[46] = static_cast<double>(out_set.size()) / static_cast<double>(n);
    v[47] = histogram_entropy(outputs);
    v[48] = pearson(inputs, outputs);
    double sensitive = 0.0;
    for (const auto& s : steps) sensitive += static_cast<double>(s.sensitive_hits);
    v[49] = sensitive;
    v[50] = static_cast<double>(total_deps) * mean_of(ratios);

    return fv;
}

FeatureVector append_model_code(const FeatureVector& v, std::string_view model_id) {
    if (v.model_code.has_value() || v.values.size() != kFeatureCount)
        throw DimensionMismatch("model code already appended");
    auto code = model_code(model_id);
    if (!code) throw UnknownModelId(std::string(model_id));
    FeatureVector out = v;
    out.values.push_back(static_cast<double>(*code));
    out.model_code = *code;
    return out;
}

Standardizer Standardizer::fit(const std::vector<FeatureVector>& vectors) {
    if (vectors.size() < 2) throw InsufficientData("standardizer needs at least 2 vectors");
    const std::size_t dim = vectors.front().dimension();
    for (const auto& v : vectors)
        if (v.dimension() != dim) throw DimensionMismatch("inconsistent feature dimensions");

    std::vector<double> means(dim, 0.0), stds(dim, 0.0);
    const double nd = static_cast<double>(vectors.size());
    for (const auto& v : vectors)
        for (std::size_t j = 0; j < dim; ++j) means[j] += v.values[j];
    for (std::size_t j = 0; j < dim; ++j) means[j] /= nd;
    for (const auto& v : vectors)
        for (std::size_t j = 0; j < dim; ++j) {
            double d = v.values[j] - means[j];
            stds[j] += d * d;
        }
    for (std::size_t j = 0; j < dim; ++j) stds[j] = std::max(std::sqrt(stds[j] / nd), 1e-12);
    return Standardizer(std::move(means), std::move(stds));
}

FeatureVector Standardizer::transform(const FeatureVector& v) const {
    if (v.dimension() != means_.size()) throw DimensionMismatch("standardizer dimension mismatch");
    FeatureVector out = v;
    // the model code, if present, is the trailing coordinate and passes through
    std::size_t limit = v.model_code.has_value() ? means_.size() - 1 : means_.size();
    for (std::size_t j = 0; j < limit; ++j)
        out.values[j] = (v.values[j] - means_[j]) / stddevs_[j];
    return out;
}

std::string feature_matrix_csv(const std::vector<ExecutionTrace>& traces,
                               const std::vector<FeatureVector>& vectors) {
    if (traces.size() != vectors.size()) throw DimensionMismatch("traces/vectors size mismatch");
    std::ostringstream out;
    out << "trace_id,model_id,label";
    for (auto name : kFeatureNames) out << ',' << name;
    bool extended = !vectors.empty() && vectors.front().model_code.has_value();
    if (extended) out << ",model_code";
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& md = traces[i].metadata;
        out << md.trace_id << ',' << md.model_id << ',' << to_string(md.label);
        for (double x : vectors[i].values) {
            std::snprintf(buf, sizeof(buf), "%.9g", x);
            out << ',' << buf;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace traceguard
