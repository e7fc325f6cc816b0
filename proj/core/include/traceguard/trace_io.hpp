#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "traceguard/trace.hpp"

namespace traceguard {

// Canonical JSON form: fixed key order, floats with 6 decimal places,
// no whitespace variation. Byte-identical for equal traces.
std::string serialize_trace(const ExecutionTrace& trace);

// Parses and re-validates. Throws MalformedSyntax, InvariantViolation,
// UnknownModelId.
ExecutionTrace parse_trace(const std::string& text);

struct CorpusLoadError {
    std::string file;
    std::string message;
};

struct CorpusLoadResult {
    std::vector<ExecutionTrace> traces;  // sorted by trace_id
    std::vector<CorpusLoadError> errors;
};

// Loads every *.json trace file under `path` (a directory tree or a single
// file). Per-file parse errors are recorded, not fatal. Throws IoFailure if
// the path does not exist.
CorpusLoadResult load_corpus(const std::filesystem::path& path);

// Write-then-rename so readers never observe a torn file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace traceguard
