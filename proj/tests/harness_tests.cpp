#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "traceguard/errors.hpp"
#include "traceguard/harness.hpp"
#include "traceguard/synth.hpp"

using namespace traceguard;
namespace fs = std::filesystem;

namespace {

// In-memory corpus: 30 benign + 10 backdoor per model, canonical trace_id order.
const std::vector<ExecutionTrace>& corpus() {
    static const std::vector<ExecutionTrace> c = [] {
        std::vector<ExecutionTrace> out;
        auto profiles = default_profiles();
        for (std::size_t m = 0; m < profiles.size(); ++m) {
            const auto& p = profiles[m];
            for (int i = 0; i < 30; ++i)
                out.push_back(generate_benign(p, static_cast<TaskCategory>(i % 4),
                                              100000 + 1000 * m + i));
            for (int i = 0; i < 10; ++i) {
                ExecutionTrace b = generate_benign(p, static_cast<TaskCategory>(i % 4),
                                                   200000 + 1000 * m + i);
                auto tm = i % 2 ? ThreatModel::TM2 : ThreatModel::TM1;
                out.push_back(inject_backdoor(b, p, default_attack(tm), 300000 + 1000 * m + i));
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return a.metadata.trace_id < b.metadata.trace_id;
        });
        return out;
    }();
    return c;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const char* name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("make_splits keeps 80/20 stratified per model and class") {
    SplitPlan plan = make_splits(corpus(), 42);
    REQUIRE(plan.splits.size() == kModelCount);
    for (std::size_t m = 0; m < kModelCount; ++m) {
        const ModelSplit& s = plan.splits[m];
        CHECK(s.model_id == kModelRegistry[m].id);  // canonical order
        // 30 benign -> 6 test, 10 backdoor -> 2 test
        CHECK(s.test.size() == 8);
        CHECK(s.train.size() == 32);
        std::set<std::size_t> seen(s.train.begin(), s.train.end());
        seen.insert(s.test.begin(), s.test.end());
        CHECK(seen.size() == 40);  // disjoint and complete
        int test_backdoor = 0;
        for (auto i : s.test) {
            CHECK(corpus()[i].metadata.model_id == s.model_id);
            if (corpus()[i].metadata.label == Label::backdoor) ++test_backdoor;
        }
        CHECK(test_backdoor == 2);
    }
    // deterministic in the seed
    SplitPlan again = make_splits(corpus(), 42);
    SplitPlan other = make_splits(corpus(), 43);
    CHECK(plan.splits[0].test == again.splits[0].test);
    CHECK(plan.splits[0].test != other.splits[0].test);
}

TEST_CASE("make_splits refuses models with under 5 samples in a class") {
    std::vector<ExecutionTrace> tiny(corpus().begin(), corpus().begin() + 12);
    CHECK_THROWS_AS(make_splits(tiny, 1), InsufficientClassSamples);
}

TEST_CASE("single detectors are deterministic and accurate on their own split") {
    SplitPlan plan = make_splits(corpus(), 42);
    TrainedDetector det = train_single_detector(corpus(), plan, "gpt-5.1", ClassifierKind::forest);
    CHECK(det.source == "gpt-5.1");
    CHECK(!det.model_aware);
    CHECK(!det.reference.empty());

    TrainedDetector again = train_single_detector(corpus(), plan, "gpt-5.1", ClassifierKind::forest);
    CHECK(model_to_string(det.model) == model_to_string(again.model));

    const ModelSplit& s = plan.for_model("gpt-5.1");
    int hits = 0;
    for (auto i : s.test) {
        bool truth = corpus()[i].metadata.label == Label::backdoor;
        if (det.score_trace(corpus()[i]).backdoor == truth) ++hits;
    }
    // wiring sanity on a deliberately small 32-trace training split; the
    // full-corpus accuracy floor lives in the acceptance suite
    CHECK(hits >= 6);
}

TEST_CASE("detection matrix aggregates match its cells") {
    SplitPlan plan = make_splits(corpus(), 42);
    DetectionMatrix mx = run_matrix(corpus(), plan, ClassifierKind::forest);
    REQUIRE(mx.models.size() == kModelCount);
    REQUIRE(mx.cells.size() == kModelCount);
    double diag = 0.0, off = 0.0, all = 0.0;
    for (std::size_t i = 0; i < kModelCount; ++i) {
        REQUIRE(mx.cells[i].size() == kModelCount);
        for (std::size_t j = 0; j < kModelCount; ++j) {
            double a = mx.cells[i][j].accuracy;
            all += a;
            (i == j ? diag : off) += a;
        }
    }
    const double n = static_cast<double>(kModelCount);
    CHECK(mx.diagonal_mean() == doctest::Approx(diag / n).epsilon(1e-12));
    CHECK(mx.off_diagonal_mean() == doctest::Approx(off / (n * n - n)).epsilon(1e-12));
    REQUIRE(mx.gap().has_value());
    CHECK(*mx.gap() == doctest::Approx(mx.diagonal_mean() - mx.off_diagonal_mean()).epsilon(1e-12));
    CHECK(mx.overall_mean() == doctest::Approx(all / (n * n)).epsilon(1e-12));
}

TEST_CASE("pooled-style strategies see no same/cross distinction") {
    SplitPlan plan = make_splits(corpus(), 42);
    for (Strategy st : {Strategy::pooled, Strategy::voting, Strategy::model_aware}) {
        StrategyResult r = run_strategy(corpus(), plan, st, ClassifierKind::forest);
        CHECK(r.strategy == st);
        CHECK(r.same_model_acc == r.cross_model_acc);
        CHECK(r.overall_acc == r.same_model_acc);
        REQUIRE(r.gap.has_value());
        CHECK(*r.gap == 0.0);
        CHECK(r.per_model.size() == kModelCount);
        long total = 0;
        for (const auto& [model, m] : r.per_model) total += m.total();
        CHECK(total == 48);  // pooled test union: 8 per model
    }
}

TEST_CASE("single strategy mirrors the detection matrix") {
    SplitPlan plan = make_splits(corpus(), 42);
    DetectionMatrix mx = run_matrix(corpus(), plan, ClassifierKind::forest);
    StrategyResult r = run_strategy(corpus(), plan, Strategy::single, ClassifierKind::forest, &mx);
    CHECK(r.same_model_acc == doctest::Approx(mx.diagonal_mean()).epsilon(1e-12));
    CHECK(r.cross_model_acc == doctest::Approx(mx.off_diagonal_mean()).epsilon(1e-12));
    REQUIRE(r.gap.has_value());
    CHECK(*r.gap == doctest::Approx(*mx.gap()).epsilon(1e-12));
}

TEST_CASE("detector bundles survive the file round trip") {
    SplitPlan plan = make_splits(corpus(), 42);
    TrainedDetector det = train_pooled_detector(corpus(), plan, ClassifierKind::svm, true);
    CHECK(det.source == "model_aware");
    CHECK(det.model_aware);

    fs::path dir = temp_dir("tg_harness_detector_test");
    save_detector(det, dir / "det.json");
    TrainedDetector back = load_detector(dir / "det.json");
    CHECK(back.source == det.source);
    CHECK(back.model_aware == det.model_aware);
    CHECK(back.reference == det.reference);
    for (int i = 0; i < 20; ++i) {
        Prediction a = det.score_trace(corpus()[i * 7]);
        Prediction b = back.score_trace(corpus()[i * 7]);
        CHECK(a.score == b.score);
        CHECK(a.backdoor == b.backdoor);
    }

    // corrupt bundle
    std::ofstream(dir / "det.json", std::ios::trunc) << "{\"format_version\":2}";
    CHECK_THROWS_AS(load_detector(dir / "det.json"), VersionMismatch);
    std::ofstream(dir / "det.json", std::ios::trunc) << "garbage";
    CHECK_THROWS_AS(load_detector(dir / "det.json"), MalformedModel);
    fs::remove_all(dir);
}

TEST_CASE("feature stability report has the frozen shape") {
    StabilityReport rep = feature_stability(corpus());
    CHECK(rep.models.size() == kModelCount);
    CHECK(rep.cohens_d.size() == kModelCount);
    for (const auto& [model, ds] : rep.cohens_d)
        for (double d : ds) CHECK(std::isfinite(d));
    REQUIRE(rep.category_rollup.size() == 4);
    CHECK(rep.category_rollup.at("temporal").total == 10);
    CHECK(rep.category_rollup.at("sequence").total == 15);
    CHECK(rep.category_rollup.at("action").total == 12);
    CHECK(rep.category_rollup.at("data_flow").total == 14);
    for (const auto& [cat, roll] : rep.category_rollup)
        CHECK(roll.stable + roll.moderate + roll.unstable <= roll.total);
    CHECK(rep.top_discriminative.size() == kModelCount);
    for (const auto& top : rep.top_discriminative) CHECK(!top.feature.empty());
}

TEST_CASE("experiment reports are byte-identical across reruns") {
    std::vector<Strategy> strategies = {Strategy::single, Strategy::pooled, Strategy::voting,
                                        Strategy::model_aware};
    ExperimentResults r1 = run_experiment(corpus(), "deadbeef", 42, ClassifierKind::forest, strategies);
    ExperimentResults r2 = run_experiment(corpus(), "deadbeef", 42, ClassifierKind::forest, strategies);

    fs::path a = temp_dir("tg_harness_reports_a");
    fs::path b = temp_dir("tg_harness_reports_b");
    emit_reports(r1, a);
    emit_reports(r2, b);
    const char* files[] = {"matrix.csv",    "matrix.txt",           "strategies.csv",
                           "stability.csv", "cohens_d.csv",         "precision_recall.csv",
                           "dataset_summary.csv", "manifest.json"};
    for (const char* f : files) {
        INFO("report file ", f);
        REQUIRE(fs::exists(a / f));
        std::string bytes = read_file(a / f);
        CHECK(bytes == read_file(b / f));
        CHECK(bytes.find("deadbeef") != std::string::npos);  // carries the corpus hash
    }
    fs::remove_all(a);
    fs::remove_all(b);
}
