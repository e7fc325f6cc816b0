#include "traceguard/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "traceguard/errors.hpp"

namespace traceguard {
namespace {

using nlohmann::json;

void append_f6(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out += buf;
}

void append_quoted(std::string& out, std::string_view s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
}

json require(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key))
        throw MalformedSyntax(std::string("missing key '") + key + "' in " + ctx);
    return j.at(key);
}

template <typename T>
T get_as(const json& j, const char* key, const char* ctx) {
    try {
        return require(j, key, ctx).get<T>();
    } catch (const json::exception& e) {
        throw MalformedSyntax(std::string("bad value for '") + key + "' in " + ctx + ": " + e.what());
    }
}

}  // namespace

std::string serialize_trace(const ExecutionTrace& trace) {
    const auto& md = trace.metadata;
    std::string out;
    out.reserve(256 + trace.steps.size() * 192);
    out += "{\"metadata\":{\"trace_id\":";
    append_quoted(out, md.trace_id);
    out += ",\"model_id\":";
    append_quoted(out, md.model_id);
    out += ",\"provider\":";
    append_quoted(out, md.provider);
    out += ",\"task_category\":";
    append_quoted(out, to_string(md.task_category));
    out += ",\"label\":";
    append_quoted(out, to_string(md.label));
    out += ",\"threat_model\":";
    append_quoted(out, to_string(md.threat_model));
    out += ",\"generator_seed\":" + std::to_string(md.generator_seed);
    out += "},\"steps\":[";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        if (i) out += ',';
        out += "{\"index\":" + std::to_string(s.index);
        out += ",\"tool\":";
        append_quoted(out, s.tool);
        out += ",\"params_length\":" + std::to_string(s.params_length);
        out += ",\"input_size\":" + std::to_string(s.input_size);
        out += ",\"output_size\":" + std::to_string(s.output_size);
        out += ",\"start_time\":";
        append_f6(out, s.start_time);
        out += ",\"end_time\":";
        append_f6(out, s.end_time);
        out += ",\"depends_on\":[";
        for (std::size_t d = 0; d < s.depends_on.size(); ++d) {
            if (d) out += ',';
            out += std::to_string(s.depends_on[d]);
        }
        out += "],\"sensitive_hits\":" + std::to_string(s.sensitive_hits);
        out += ",\"unauthorized\":";
        out += s.unauthorized ? "true" : "false";
        out += '}';
    }
    out += "]}";
    return out;
}

ExecutionTrace parse_trace(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw MalformedSyntax(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedSyntax("top level must be an object");

    ExecutionTrace trace;
    json jm = require(j, "metadata", "trace");
    auto& md = trace.metadata;
    md.trace_id = get_as<std::string>(jm, "trace_id", "metadata");
    md.model_id = get_as<std::string>(jm, "model_id", "metadata");
    md.provider = get_as<std::string>(jm, "provider", "metadata");
    auto task = parse_task_category(get_as<std::string>(jm, "task_category", "metadata"));
    if (!task) throw InvariantViolation("task_category", "not a known task category");
    md.task_category = *task;
    auto label = parse_label(get_as<std::string>(jm, "label", "metadata"));
    if (!label) throw InvariantViolation("label", "must be 'benign' or 'backdoor'");
    md.label = *label;
    auto tm = parse_threat_model(get_as<std::string>(jm, "threat_model", "metadata"));
    if (!tm) throw InvariantViolation("threat_model", "must be one of none/TM1/TM2");
    md.threat_model = *tm;
    md.generator_seed = get_as<std::int64_t>(jm, "generator_seed", "metadata");

    json js = require(j, "steps", "trace");
    if (!js.is_array()) throw MalformedSyntax("'steps' must be an array");
    for (const auto& je : js) {
        StepRecord s;
        s.index = get_as<int>(je, "index", "step");
        s.tool = get_as<std::string>(je, "tool", "step");
        s.params_length = get_as<std::int64_t>(je, "params_length", "step");
        s.input_size = get_as<std::int64_t>(je, "input_size", "step");
        s.output_size = get_as<std::int64_t>(je, "output_size", "step");
        s.start_time = get_as<double>(je, "start_time", "step");
        s.end_time = get_as<double>(je, "end_time", "step");
        s.depends_on = get_as<std::vector<int>>(je, "depends_on", "step");
        s.sensitive_hits = get_as<std::int64_t>(je, "sensitive_hits", "step");
        s.unauthorized = get_as<bool>(je, "unauthorized", "step");
        trace.steps.push_back(std::move(s));
    }

    validate_trace(trace);
    return trace;
}

CorpusLoadResult load_corpus(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw IoFailure("path does not exist: " + path.string());

    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json" &&
                entry.path().filename() != "manifest.json")
                files.push_back(entry.path());
    } else {
        files.push_back(path);
    }
    std::sort(files.begin(), files.end());

    CorpusLoadResult result;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) {
            result.errors.push_back({f.string(), "cannot open file"});
            continue;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            result.traces.push_back(parse_trace(ss.str()));
        } catch (const TraceguardError& e) {
            result.errors.push_back({f.string(), e.what()});
        }
    }
    std::stable_sort(result.traces.begin(), result.traces.end(),
                     [](const ExecutionTrace& a, const ExecutionTrace& b) {
                         return a.metadata.trace_id < b.metadata.trace_id;
                     });
    return result;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoFailure("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoFailure("rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace traceguard
