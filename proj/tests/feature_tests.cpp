#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "traceguard/errors.hpp"
#include "traceguard/features.hpp"
#include "traceguard/rng.hpp"
#include "traceguard/synth.hpp"
#include "traceguard/trace.hpp"

using namespace traceguard;

namespace {

// Frozen golden trace: 5 steps, every feature computable by hand.
// tools:      web_fetch, file_read, web_fetch, web_fetch, summarize
// durations:  1.0  0.5  1.0  2.0  0.5       delays: 1.0 0.5 0.5 0.5
// inputs:     100  200  100  400  0         outputs: 200 100 300 400 5
// params:     10   20   30   40   50
// deps:       s2<-0, s3<-{1,2}; sensitive 0 1 0 2 0; s3 unauthorized
ExecutionTrace golden_trace() {
    ExecutionTrace t;
    t.metadata.trace_id = "golden-5";
    t.metadata.model_id = "gpt-5.1";
    t.metadata.provider = "openai";
    t.metadata.task_category = TaskCategory::web_research;
    t.metadata.label = Label::benign;
    t.metadata.generator_seed = 0;

    const char* tools[5] = {"web_fetch", "file_read", "web_fetch", "web_fetch", "summarize"};
    const double starts[5] = {0.0, 2.0, 3.0, 4.5, 7.0};
    const double ends[5] = {1.0, 2.5, 4.0, 6.5, 7.5};
    const std::int64_t ins[5] = {100, 200, 100, 400, 0};
    const std::int64_t outs[5] = {200, 100, 300, 400, 5};
    const std::int64_t sens[5] = {0, 1, 0, 2, 0};
    for (int i = 0; i < 5; ++i) {
        StepRecord s;
        s.index = i;
        s.tool = tools[i];
        s.params_length = 10 * (i + 1);
        s.input_size = ins[i];
        s.output_size = outs[i];
        s.start_time = starts[i];
        s.end_time = ends[i];
        s.sensitive_hits = sens[i];
        if (i == 2) s.depends_on = {0};
        if (i == 3) {
            s.depends_on = {1, 2};
            s.unauthorized = true;
        }
        t.steps.push_back(std::move(s));
    }
    validate_trace(t);
    return t;
}

// entropy of explicit probabilities, summed in the given order
double entropy_of(const std::vector<double>& ps) {
    double h = 0.0;
    for (double p : ps) h -= p * std::log(p);
    return h;
}

ExecutionTrace random_trace(std::uint64_t seed) {
    static const std::vector<ModelProfile> profiles = default_profiles();
    Rng pick(seed);
    const ModelProfile& p = profiles[pick.next_u64() % profiles.size()];
    auto task = static_cast<TaskCategory>(pick.next_u64() % 4);
    ExecutionTrace t = generate_benign(p, task, seed);
    if (pick.bernoulli(0.5)) {
        auto tm = pick.bernoulli(0.5) ? ThreatModel::TM1 : ThreatModel::TM2;
        t = inject_backdoor(t, p, default_attack(tm), seed + 1);
    }
    return t;
}

}  // namespace

TEST_CASE("golden 5-step trace yields the hand-computed 51-vector exactly") {
    ExecutionTrace t = golden_trace();
    BigramSet reference = {{"web_fetch", "file_read"}, {"file_read", "web_fetch"}};
    FeatureVector fv = extract_features(t, &reference);
    REQUIRE(fv.values.size() == kFeatureCount);

    std::vector<double> e(kFeatureCount, 0.0);
    // temporal
    e[0] = 5.0 / 5.0;                 // avg_duration
    e[1] = 2.0;                       // max_duration
    e[2] = std::sqrt(1.5 / 5.0);      // std_duration (population)
    e[3] = 2.5 / 4.0;                 // avg_delay
    e[4] = 1.0;                       // max_delay
    e[5] = 7.5;                       // total_duration
    e[6] = 5.0 / 7.5;                 // execution_rate
    // delays 1.0 0.5 0.5 0.5 -> 10 bins over [0.5,1.0]: bin0 x3, bin9 x1
    e[7] = entropy_of({0.75, 0.25});  // timing_entropy
    e[8] = 0.0;                       // min 3-window 0.5 >= 0.25 * 0.625
    e[9] = 0.0;
    // sequence: bigrams (wf,fr) (fr,wf) (wf,wf) (wf,sum), all once
    e[10] = 4.0;
    e[11] = 1.0 / 4.0;
    e[12] = entropy_of({0.25, 0.25, 0.25, 0.25});
    e[13] = 3.0;  // trigrams, all distinct
    e[14] = entropy_of({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    e[15] = 0.0;            // repetition_ratio = 1 - 4/4
    e[16] = 2.0;            // wf,wf run
    e[17] = 5.0;            // sequence_length
    e[18] = 4.0;            // unique_transitions
    e[19] = e[12];          // transition_entropy
    e[20] = 0.0;            // no revisit across >= 2 distinct tools
    e[21] = 0.0;
    e[22] = 2.0 / 5.0;      // steps with dependencies
    e[23] = 3.0;            // total dependency edges
    e[24] = 0.0;            // no tool below 5% frequency
    // action
    e[25] = 5.0;
    e[26] = 3.0;
    e[27] = 3.0 / 5.0;
    e[28] = 3.0 / 5.0;      // web_fetch 3/5
    e[29] = e[12];
    e[30] = 1.0;            // file_read_count
    e[31] = 3.0;            // web_fetch_count
    e[32] = 3.0 / 4.0;      // switches at steps 1,2,4
    e[33] = 1.0;            // unauthorized steps
    e[34] = 1.0 - 2.0 / 4.0;  // 2 of 4 bigrams in the benign reference
    e[35] = 150.0 / 5.0;
    e[36] = 50.0;
    // data_flow
    e[37] = 800.0 / 5.0;
    e[38] = 400.0;
    e[39] = std::sqrt(92000.0 / 5.0);
    e[40] = 1005.0 / 5.0;
    e[41] = 400.0;
    e[42] = std::sqrt(98020.0 / 5.0);
    e[43] = 11.5 / 5.0;     // ratios 2.0 0.5 3.0 1.0 5.0
    e[44] = 5.0;
    e[45] = 4.0 / 5.0;      // distinct inputs {0,100,200,400}
    e[46] = 5.0 / 5.0;      // all outputs distinct
    // outputs histogram over [5,400]: bins 4,2,7,9,0 all singletons
    e[47] = entropy_of({0.2, 0.2, 0.2, 0.2, 0.2});
    e[48] = 69200.0 / std::sqrt(92000.0 * 98020.0);  // io_coupling (Pearson)
    e[49] = 3.0;            // sensitive mentions
    e[50] = 3.0 * (11.5 / 5.0);  // total_dependencies * mean io ratio

    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        INFO("feature ", i, " (", std::string(feature_names()[i]), ")");
        CHECK(fv.values[i] == e[i]);
    }
}

TEST_CASE("golden trace without a bigram reference scores zero anomaly") {
    FeatureVector fv = extract_features(golden_trace(), nullptr);
    CHECK(fv.values[34] == 0.0);
    BigramSet empty;
    CHECK(extract_features(golden_trace(), &empty).values[34] == 0.0);
}

TEST_CASE("feature names, categories and sizes are frozen") {
    const auto& names = feature_names();
    REQUIRE(names.size() == kFeatureCount);
    CHECK(names[0] == "avg_duration");
    CHECK(names[10] == "unique_bigrams");
    CHECK(names[25] == "tool_count");
    CHECK(names[37] == "avg_input_size");
    CHECK(names[50] == "data_flow_complexity");
    int counts[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        counts[static_cast<int>(feature_category(i))]++;
    CHECK(counts[0] == 10);  // temporal
    CHECK(counts[1] == 15);  // sequence
    CHECK(counts[2] == 12);  // action
    CHECK(counts[3] == 14);  // data_flow
}

TEST_CASE("time-shift invariance and bounds hold on 1000 random traces") {
    std::vector<ExecutionTrace> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(random_trace(9000 + i));
    BigramSet reference = collect_benign_bigrams(pool);

    for (int i = 0; i < 1000; ++i) {
        ExecutionTrace t = random_trace(10000 + i);
        FeatureVector fv = extract_features(t, &reference);
        REQUIRE(fv.values.size() == kFeatureCount);

        ExecutionTrace shifted = t;
        for (auto& s : shifted.steps) {
            s.start_time += 3600.0;  // whole seconds stay on the time grid
            s.end_time += 3600.0;
        }
        FeatureVector fs = extract_features(shifted, &reference);
        // invariance up to time-representation rounding of the shifted stamps;
        // timing_entropy (7) bins delays, so a bin-edge value may flip under
        // that rounding and only gets a coarse band
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            if (j == 7)
                CHECK(std::abs(fs.values[j] - fv.values[j]) <= 0.5);
            else
                CHECK(fs.values[j] ==
                      doctest::Approx(fv.values[j]).epsilon(1e-7).scale(1.0));
        }

        const auto& v = fv.values;
        const double n = static_cast<double>(t.steps.size());
        const double ln10 = std::log(10.0);
        // temporal bounds
        CHECK(v[0] > 0.0);
        CHECK(v[1] >= v[0]);
        CHECK(v[2] >= 0.0);
        CHECK(v[3] >= 0.0);
        CHECK(v[4] >= v[3]);
        CHECK(v[5] >= v[1]);
        CHECK(v[6] > 0.0);
        CHECK(v[7] >= 0.0);
        CHECK(v[7] <= ln10 + 1e-12);
        CHECK((v[8] == 0.0 || v[8] == 1.0));
        if (v[8] == 1.0) CHECK(v[9] > 4.0);  // burst window below a quarter of mean
        else CHECK(v[9] == 0.0);
        // sequence bounds
        CHECK(v[10] >= 1.0);
        CHECK(v[10] <= n - 1.0);
        CHECK(v[11] > 0.0);
        CHECK(v[11] <= 1.0);
        CHECK(v[12] >= 0.0);
        CHECK(v[12] <= std::log(n - 1.0) + 1e-12);
        CHECK(v[15] >= 0.0);
        CHECK(v[15] < 1.0);
        CHECK(v[16] >= 1.0);
        CHECK(v[17] == n);
        CHECK(v[18] == v[10]);
        CHECK(v[19] == v[12]);
        CHECK((v[20] == 0.0 || v[20] == 1.0));
        CHECK(v[22] >= 0.0);
        CHECK(v[22] <= 1.0);
        CHECK(v[24] >= 0.0);
        CHECK(v[24] <= 1.0);
        // action bounds
        CHECK(v[25] == n);
        CHECK(v[26] >= 1.0);
        CHECK(v[27] > 0.0);
        CHECK(v[27] <= 1.0);
        CHECK(v[28] > 0.0);
        CHECK(v[28] <= 1.0);
        CHECK(v[30] >= 0.0);
        CHECK(v[32] >= 0.0);
        CHECK(v[32] <= 1.0);
        CHECK(v[34] >= 0.0);
        CHECK(v[34] <= 1.0);
        // data_flow bounds
        CHECK(v[38] >= v[37]);
        CHECK(v[41] >= v[40]);
        CHECK(v[43] > 0.0);
        CHECK(v[44] >= v[43]);
        CHECK(v[45] > 0.0);
        CHECK(v[45] <= 1.0);
        CHECK(v[46] > 0.0);
        CHECK(v[46] <= 1.0);
        CHECK(v[47] >= 0.0);
        CHECK(v[47] <= ln10 + 1e-12);
        CHECK(v[48] >= -1.0 - 1e-12);
        CHECK(v[48] <= 1.0 + 1e-12);
        CHECK(v[49] >= 0.0);
    }
}

TEST_CASE("adding a file_read step bumps its count by exactly one") {
    ExecutionTrace t = golden_trace();
    FeatureVector before = extract_features(t);
    StepRecord s = t.steps.back();
    s.index = static_cast<int>(t.steps.size());
    s.tool = "file_read";
    s.start_time += 1.0;
    s.end_time += 1.0;
    s.depends_on.clear();
    t.steps.push_back(std::move(s));
    FeatureVector after = extract_features(t);
    CHECK(after.values[30] == before.values[30] + 1.0);
    CHECK(after.values[49] >= before.values[49]);  // sensitive count never drops
    CHECK(after.values[33] >= before.values[33]);
}

TEST_CASE("constant-tool trace pins the ratio features") {
    ExecutionTrace t = golden_trace();
    for (auto& s : t.steps) s.tool = "web_fetch";
    FeatureVector fv = extract_features(t);
    CHECK(fv.values[27] == 1.0 / 5.0);  // tool_diversity
    CHECK(fv.values[32] == 0.0);        // no switches
    CHECK(fv.values[16] == 5.0);        // one unbroken run
}

TEST_CASE("single-step trace hits the degenerate paths without NaNs") {
    ExecutionTrace t = golden_trace();
    t.steps.resize(1);
    FeatureVector fv = extract_features(t);
    for (double x : fv.values) CHECK(std::isfinite(x));
    CHECK(fv.values[2] == 0.0);   // std of one value
    CHECK(fv.values[3] == 0.0);   // no delays
    CHECK(fv.values[10] == 0.0);  // no bigrams
    CHECK(fv.values[17] == 1.0);
    CHECK(fv.values[48] == 0.0);  // pearson undefined -> 0
}

TEST_CASE("append_model_code adds the registry ordinal as feature 52") {
    FeatureVector fv = extract_features(golden_trace());
    FeatureVector ext = append_model_code(fv, "grok-4.1-fast");
    REQUIRE(ext.values.size() == kFeatureCount + 1);
    CHECK(ext.values.back() == 2.0);
    CHECK(ext.model_code == 2);
    // base features untouched
    for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(ext.values[i] == fv.values[i]);

    CHECK_THROWS_AS(append_model_code(ext, "grok-4.1-fast"), DimensionMismatch);
    CHECK_THROWS_AS(append_model_code(fv, "mystery-model"), UnknownModelId);
}

TEST_CASE("collect_benign_bigrams ignores backdoor traces") {
    ExecutionTrace benign = golden_trace();
    ExecutionTrace backdoor = golden_trace();
    backdoor.metadata.label = Label::backdoor;
    backdoor.metadata.threat_model = ThreatModel::TM1;
    for (auto& s : backdoor.steps) s.tool = "database_query";
    BigramSet set = collect_benign_bigrams({benign, backdoor});
    CHECK(set.count({"web_fetch", "file_read"}) == 1);
    CHECK(set.count({"database_query", "database_query"}) == 0);
}

TEST_CASE("standardizer normalizes to zero mean and unit variance") {
    std::vector<FeatureVector> X;
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        FeatureVector v;
        v.values = {rng.normal(5.0, 2.0), rng.normal(-3.0, 0.5), 7.0};  // last is constant
        X.push_back(std::move(v));
    }
    Standardizer st = Standardizer::fit(X);
    REQUIRE(st.dimension() == 3);
    double m0 = 0.0, m1 = 0.0, s0 = 0.0, s1 = 0.0;
    for (const auto& v : X) {
        FeatureVector z = st.transform(v);
        m0 += z.values[0];
        m1 += z.values[1];
        s0 += z.values[0] * z.values[0];
        s1 += z.values[1] * z.values[1];
        CHECK(z.values[2] == 0.0);  // constant column maps to 0 via the sigma floor
    }
    CHECK(std::abs(m0 / 200.0) < 1e-9);
    CHECK(std::abs(m1 / 200.0) < 1e-9);
    CHECK(s0 / 200.0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s1 / 200.0 == doctest::Approx(1.0).epsilon(1e-9));
    // transform is invertible through the stored parameters
    FeatureVector z = st.transform(X[0]);
    for (int j = 0; j < 2; ++j)
        CHECK(z.values[j] * st.stddevs()[j] + st.means()[j] ==
              doctest::Approx(X[0].values[j]).epsilon(1e-12));
}

TEST_CASE("standardizer rejects bad input") {
    FeatureVector a, b;
    a.values = {1.0, 2.0};
    b.values = {1.0};
    CHECK_THROWS_AS(Standardizer::fit({a}), InsufficientData);
    CHECK_THROWS_AS(Standardizer::fit({a, b}), DimensionMismatch);
    Standardizer st = Standardizer::fit({a, a});
    CHECK_THROWS_AS(st.transform(b), DimensionMismatch);
}

TEST_CASE("standardizer passes the model code coordinate through unchanged") {
    std::vector<FeatureVector> X;
    for (int i = 0; i < 4; ++i) {
        FeatureVector v = extract_features(golden_trace());
        v.values[0] += i;  // some variance
        X.push_back(append_model_code(v, kModelRegistry[i].id));
    }
    Standardizer st = Standardizer::fit(X);
    FeatureVector z = st.transform(X[2]);
    CHECK(z.values.back() == 2.0);  // untouched ordinal
}

TEST_CASE("feature_matrix_csv emits one row per trace with the frozen header") {
    ExecutionTrace t = golden_trace();
    std::vector<FeatureVector> vs = {extract_features(t)};
    std::string csv = feature_matrix_csv({t}, vs);
    CHECK(csv.rfind("trace_id,model_id,label,avg_duration,", 0) == 0);
    CHECK(csv.find("golden-5,gpt-5.1,benign,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + 1 row
    CHECK_THROWS_AS(feature_matrix_csv({t}, {}), DimensionMismatch);
}
