#include "traceguard/trace.hpp"

#include <algorithm>
#include <cmath>

#include "traceguard/errors.hpp"

namespace traceguard {

double ExecutionTrace::total_duration() const {
    if (steps.empty()) return 0.0;
    double first = steps.front().start_time;
    double last = 0.0;
    for (const auto& s : steps) {
        first = std::min(first, s.start_time);
        last = std::max(last, s.end_time);
    }
    return last - first;
}

void validate_trace(const ExecutionTrace& trace) {
    const auto& md = trace.metadata;
    if (md.trace_id.empty()) throw InvariantViolation("trace_id", "must be non-empty");
    if (!is_known_model(md.model_id)) throw UnknownModelId(md.model_id);
    if ((md.threat_model == ThreatModel::none) != (md.label == Label::benign))
        throw InvariantViolation("threat_model", "threat_model is none iff label is benign");
    if (trace.steps.empty()) throw InvariantViolation("steps", "trace must have at least one step");

    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        if (s.index != static_cast<int>(i))
            throw InvariantViolation("index", "step indices must be 0-based and contiguous");
        if (s.tool.empty()) throw InvariantViolation("tool", "tool name must be non-empty");
        if (s.params_length < 0) throw InvariantViolation("params_length", "must be >= 0");
        if (s.input_size < 0) throw InvariantViolation("input_size", "must be >= 0");
        if (s.output_size < 0) throw InvariantViolation("output_size", "must be >= 0");
        if (s.sensitive_hits < 0) throw InvariantViolation("sensitive_hits", "must be >= 0");
        if (!(s.start_time >= 0.0) || !std::isfinite(s.start_time))
            throw InvariantViolation("start_time", "must be finite and >= 0");
        if (!(s.end_time > s.start_time))
            throw InvariantViolation("end_time", "end_time must exceed start_time");
        for (int dep : s.depends_on)
            if (dep < 0 || dep >= s.index)
                throw InvariantViolation("depends_on", "dependencies must reference earlier steps");
        if (i > 0) {
            const auto& prev = trace.steps[i - 1];
            if (s.start_time < prev.start_time ||
                (s.start_time == prev.start_time && s.index < prev.index))
                throw InvariantViolation("start_time", "steps must be sorted by start_time, ties by index");
        }
    }
}

}  // namespace traceguard
