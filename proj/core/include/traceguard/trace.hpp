#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "traceguard/registry.hpp"

namespace traceguard {

// One tool invocation inside a trace. Times are relative seconds from trace
// start, quantized to microseconds so the canonical JSON form round-trips
// exactly.
struct StepRecord {
    int index = 0;
    std::string tool;
    std::int64_t params_length = 0;
    std::int64_t input_size = 0;
    std::int64_t output_size = 0;
    double start_time = 0.0;
    double end_time = 0.0;
    std::vector<int> depends_on;
    std::int64_t sensitive_hits = 0;
    bool unauthorized = false;

    double duration() const { return end_time - start_time; }

    bool operator==(const StepRecord&) const = default;
};

struct TraceMetadata {
    std::string trace_id;
    std::string model_id;
    std::string provider;
    TaskCategory task_category = TaskCategory::web_research;
    Label label = Label::benign;
    ThreatModel threat_model = ThreatModel::none;
    std::int64_t generator_seed = 0;

    bool operator==(const TraceMetadata&) const = default;
};

struct ExecutionTrace {
    TraceMetadata metadata;
    std::vector<StepRecord> steps;

    double total_duration() const;

    bool operator==(const ExecutionTrace&) const = default;
};

// Throws InvariantViolation / UnknownModelId on the first violated rule.
void validate_trace(const ExecutionTrace& trace);

// Round a relative timestamp to the 6-decimal grid used by the canonical
// JSON encoding.
inline double quantize_time(double t) {
    return static_cast<double>(static_cast<std::int64_t>(t * 1e6 + (t >= 0 ? 0.5 : -0.5))) / 1e6;
}

}  // namespace traceguard
