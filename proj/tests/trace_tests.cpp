#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "traceguard/errors.hpp"
#include "traceguard/synth.hpp"
#include "traceguard/trace.hpp"
#include "traceguard/trace_io.hpp"

using namespace traceguard;
namespace fs = std::filesystem;

namespace {

ExecutionTrace small_trace() {
    ExecutionTrace t;
    t.metadata.trace_id = "gpt-5.1-x1";
    t.metadata.model_id = "gpt-5.1";
    t.metadata.provider = "openai";
    t.metadata.task_category = TaskCategory::data_analysis;
    t.metadata.label = Label::benign;
    t.metadata.threat_model = ThreatModel::none;
    t.metadata.generator_seed = 7;
    for (int i = 0; i < 3; ++i) {
        StepRecord s;
        s.index = i;
        s.tool = i == 1 ? "file_read" : "web_fetch";
        s.params_length = 10 + i;
        s.input_size = 100 * (i + 1);
        s.output_size = 200 * (i + 1);
        s.start_time = quantize_time(i * 1.5);
        s.end_time = quantize_time(i * 1.5 + 0.25);
        if (i == 2) s.depends_on = {0, 1};
        s.sensitive_hits = i;
        s.unauthorized = false;
        t.steps.push_back(std::move(s));
    }
    return t;
}

fs::path temp_dir(const char* name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("trace validation accepts a well-formed trace") {
    CHECK_NOTHROW(validate_trace(small_trace()));
}

TEST_CASE("trace serialization round-trips exactly") {
    ExecutionTrace t = small_trace();
    std::string text = serialize_trace(t);
    ExecutionTrace back = parse_trace(text);
    CHECK(back == t);
    // canonical form: serialize is byte-stable through a round trip
    CHECK(serialize_trace(back) == text);
}

TEST_CASE("serialized form uses fixed 6-decimal timestamps") {
    ExecutionTrace t = small_trace();
    std::string text = serialize_trace(t);
    CHECK(text.find("\"start_time\":0.000000") != std::string::npos);
    CHECK(text.find("\"end_time\":0.250000") != std::string::npos);
}

TEST_CASE("generated traces survive the serialization round trip") {
    auto profiles = default_profiles();
    for (const auto& p : profiles) {
        ExecutionTrace t = generate_benign(p, TaskCategory::web_research, 99);
        ExecutionTrace back = parse_trace(serialize_trace(t));
        CHECK(back == t);
    }
}

TEST_CASE("trace invariant violations are rejected") {
    SUBCASE("empty trace id") {
        ExecutionTrace t = small_trace();
        t.metadata.trace_id.clear();
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("unknown model id") {
        ExecutionTrace t = small_trace();
        t.metadata.model_id = "gpt-99";
        CHECK_THROWS_AS(validate_trace(t), UnknownModelId);
    }
    SUBCASE("threat model / label consistency") {
        ExecutionTrace t = small_trace();
        t.metadata.threat_model = ThreatModel::TM1;  // still labeled benign
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
        t.metadata.label = Label::backdoor;
        t.metadata.threat_model = ThreatModel::none;
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("no steps") {
        ExecutionTrace t = small_trace();
        t.steps.clear();
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("non-contiguous indices") {
        ExecutionTrace t = small_trace();
        t.steps[1].index = 5;
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("empty tool name") {
        ExecutionTrace t = small_trace();
        t.steps[0].tool.clear();
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("negative sizes") {
        ExecutionTrace t = small_trace();
        t.steps[0].input_size = -1;
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("end before start") {
        ExecutionTrace t = small_trace();
        t.steps[0].end_time = t.steps[0].start_time;
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("forward dependency") {
        ExecutionTrace t = small_trace();
        t.steps[1].depends_on = {2};
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
    SUBCASE("unsorted start times") {
        ExecutionTrace t = small_trace();
        t.steps[2].start_time = 0.0;
        t.steps[2].end_time = 0.1;
        CHECK_THROWS_AS(validate_trace(t), InvariantViolation);
    }
}

TEST_CASE("parse_trace rejects malformed input") {
    CHECK_THROWS_AS(parse_trace("not json"), MalformedSyntax);
    CHECK_THROWS_AS(parse_trace("[1,2,3]"), MalformedSyntax);
    CHECK_THROWS_AS(parse_trace("{\"steps\":[]}"), MalformedSyntax);  // missing metadata
    // missing step key
    ExecutionTrace t = small_trace();
    std::string text = serialize_trace(t);
    auto pos = text.find("\"input_size\"");
    std::string broken = text.substr(0, pos) + "\"x\"" + text.substr(text.find(',', pos));
    CHECK_THROWS_AS(parse_trace(broken), MalformedSyntax);
}

TEST_CASE("load_corpus records per-file errors and keeps good traces sorted") {
    fs::path dir = temp_dir("tg_trace_load_test");
    ExecutionTrace a = small_trace();
    a.metadata.trace_id = "gpt-5.1-b";
    ExecutionTrace b = small_trace();
    b.metadata.trace_id = "gpt-5.1-a";
    atomic_write_file(dir / "t1.json", serialize_trace(a));
    atomic_write_file(dir / "t2.json", serialize_trace(b));
    atomic_write_file(dir / "bad.json", "{broken");
    atomic_write_file(dir / "manifest.json", "{}");  // skipped by convention
    atomic_write_file(dir / "notes.txt", "ignored");

    CorpusLoadResult result = load_corpus(dir);
    REQUIRE(result.traces.size() == 2);
    CHECK(result.traces[0].metadata.trace_id == "gpt-5.1-a");
    CHECK(result.traces[1].metadata.trace_id == "gpt-5.1-b");
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].file.find("bad.json") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("load_corpus of a missing path throws IoFailure") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/definitely/missing"), IoFailure);
}

TEST_CASE("atomic_write_file leaves no temp file behind") {
    fs::path dir = temp_dir("tg_atomic_test");
    atomic_write_file(dir / "out.txt", "hello");
    std::ifstream in(dir / "out.txt");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "hello");
    CHECK(!fs::exists(dir / "out.txt.tmp"));
    fs::remove_all(dir);
}

TEST_CASE("quantize_time rounds to microseconds") {
    CHECK(quantize_time(1.2345678) == doctest::Approx(1.234568).epsilon(1e-12));
    CHECK(quantize_time(0.0) == 0.0);
    CHECK(quantize_time(2.0000004) == doctest::Approx(2.0).epsilon(1e-12));
}
