#include "traceguard/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "traceguard/errors.hpp"
#include "traceguard/registry.hpp"
#include "traceguard/rng.hpp"
#include "traceguard/trace_io.hpp"

namespace traceguard {
namespace {

using nlohmann::ordered_json;

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<std::string> corpus_models(const std::vector<ExecutionTrace>& corpus) {
    std::vector<std::string> models;
    for (const auto& entry : kModelRegistry) {
        std::string id(entry.id);
        for (const auto& t : corpus)
            if (t.metadata.model_id == id) {
                models.push_back(id);
                break;
            }
    }
    return models;
}

std::vector<const ExecutionTrace*> select(const std::vector<ExecutionTrace>& corpus,
                                          const std::vector<std::size_t>& idx) {
    std::vector<const ExecutionTrace*> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(&corpus[i]);
    return out;
}

struct EvalRow {
    double score;
    bool predicted;
    bool actual;
    std::string model_id;
};

EvalMetrics metrics_from_rows(const std::vector<EvalRow>& rows) {
    // confusion from the stored predicted labels; threshold -inf unused
    EvalMetrics m;
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& r : rows) {
        scores.push_back(r.score);
        labels.push_back(r.actual);
        if (r.predicted && r.actual) ++m.tp;
        else if (r.predicted && !r.actual) ++m.fp;
        else if (!r.predicted && r.actual) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = rows.empty() ? 0.0 : static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.auc_roc = auc_mann_whitney(scores, labels);
    return m;
}

}  // namespace

const ModelSplit& SplitPlan::for_model(const std::string& model_id) const {
    for (const auto& s : splits)
        if (s.model_id == model_id) return s;
    throw TraceguardError("no split for model " + model_id);
}

SplitPlan make_splits(const std::vector<ExecutionTrace>& corpus, std::uint64_t seed) {
    SplitPlan plan;
    plan.seed = seed;
    for (const auto& model_id : corpus_models(corpus)) {
        std::vector<std::size_t> benign, backdoor;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (corpus[i].metadata.model_id != model_id) continue;
            (corpus[i].metadata.label == Label::benign ? benign : backdoor).push_back(i);
        }
        if (benign.size() < 5 || backdoor.size() < 5)
            throw InsufficientClassSamples("model " + model_id + " needs >= 5 traces per class");
        // canonical order before shuffling: sort by trace_id
        auto by_id = [&](std::size_t a, std::size_t b) {
            return corpus[a].metadata.trace_id < corpus[b].metadata.trace_id;
        };
        std::sort(benign.begin(), benign.end(), by_id);
        std::sort(backdoor.begin(), backdoor.end(), by_id);

        ModelSplit split;
        split.model_id = model_id;
        for (auto* group : {&benign, &backdoor}) {
            Rng rng(derive_seed(seed, model_id + "/split", group == &benign ? 0 : 1));
            for (std::size_t i = group->size(); i > 1; --i)
                std::swap((*group)[i - 1],
                          (*group)[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
            std::size_t test_n = group->size() / 5;  // floor(0.2 * n)
            for (std::size_t i = 0; i < group->size(); ++i)
                (i < test_n ? split.test : split.train).push_back((*group)[i]);
        }
        std::sort(split.train.begin(), split.train.end(), by_id);
        std::sort(split.test.begin(), split.test.end(), by_id);
        plan.splits.push_back(std::move(split));
    }
    return plan;
}

Prediction TrainedDetector::score_trace(const ExecutionTrace& trace) const {
    FeatureVector fv = extract_features(trace, &reference);
    if (model_aware) fv = append_model_code(fv, trace.metadata.model_id);
    return predict_any(model, standardizer.transform(fv));
}

namespace {

TrainedDetector fit_detector(const std::vector<ExecutionTrace>& corpus,
                             const std::vector<std::size_t>& train_idx, const std::string& source,
                             bool model_aware, ClassifierKind kind, std::uint64_t seed) {
    TrainedDetector det;
    det.source = source;
    det.model_aware = model_aware;
    det.seed = seed;

    std::vector<ExecutionTrace> benign_train;
    for (const auto* t : select(corpus, train_idx))
        if (t->metadata.label == Label::benign) benign_train.push_back(*t);
    det.reference = collect_benign_bigrams(benign_train);

    std::vector<FeatureVector> X;
    std::vector<bool> y;
    for (std::size_t i : train_idx) {
        FeatureVector fv = extract_features(corpus[i], &det.reference);
        if (model_aware) fv = append_model_code(fv, corpus[i].metadata.model_id);
        X.push_back(std::move(fv));
        y.push_back(corpus[i].metadata.label == Label::backdoor);
    }
    det.standardizer = Standardizer::fit(X);
    for (auto& fv : X) fv = det.standardizer.transform(fv);
    if (kind == ClassifierKind::forest)
        det.model = train_forest(X, y, seed);
    else
        det.model = train_svm(X, y, seed);
    return det;
}

}  // namespace

void save_detector(const TrainedDetector& det, const std::filesystem::path& path) {
    ordered_json j;
    j["format_version"] = 1;
    j["source"] = det.source;
    j["model_aware"] = det.model_aware;
    j["seed"] = det.seed;
    j["standardizer"] = ordered_json{{"means", det.standardizer.means()},
                                     {"stddevs", det.standardizer.stddevs()}};
    ordered_json ref = ordered_json::array();
    for (const auto& [a, b] : det.reference) ref.push_back(ordered_json::array({a, b}));
    j["reference_bigrams"] = std::move(ref);
    j["model"] = ordered_json::parse(model_to_string(det.model));
    atomic_write_file(path, j.dump() + "\n");
}

TrainedDetector load_detector(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open detector file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    ordered_json j;
    try {
        j = ordered_json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("detector file: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw VersionMismatch("unsupported detector format version");
        TrainedDetector det;
        det.source = j.at("source").get<std::string>();
        det.model_aware = j.at("model_aware").get<bool>();
        det.seed = j.at("seed").get<std::uint64_t>();
        det.standardizer =
            Standardizer(j.at("standardizer").at("means").get<std::vector<double>>(),
                         j.at("standardizer").at("stddevs").get<std::vector<double>>());
        for (const auto& pair : j.at("reference_bigrams"))
            det.reference.emplace(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        det.model = model_from_string(j.at("model").dump() + "\n");
        return det;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("detector file: ") + e.what());
    }
}

TrainedDetector train_single_detector(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                                      const std::string& model_id, ClassifierKind kind) {
    return fit_detector(corpus, plan.for_model(model_id).train, model_id, false, kind, plan.seed);
}

TrainedDetector train_pooled_detector(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                                      ClassifierKind kind, bool model_aware) {
    std::vector<std::size_t> all_train;
    for (const auto& s : plan.splits)
        all_train.insert(all_train.end(), s.train.begin(), s.train.end());
    std::sort(all_train.begin(), all_train.end());
    return fit_detector(corpus, all_train, model_aware ? "model_aware" : "pooled", model_aware, kind,
                        plan.seed);
}

double DetectionMatrix::diagonal_mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) s += cells[i][i].accuracy;
    return s / static_cast<double>(models.size());
}

double DetectionMatrix::off_diagonal_mean() const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = 0; j < models.size(); ++j)
            if (i != j) {
                s += cells[i][j].accuracy;
                ++n;
            }
    return n > 0 ? s / static_cast<double>(n) : 0.0;
}

std::optional<double> DetectionMatrix::gap() const {
    if (models.size() < 2) return std::nullopt;
    return diagonal_mean() - off_diagonal_mean();
}

double DetectionMatrix::overall_mean() const {
    double s = 0.0;
    for (const auto& row : cells)
        for (const auto& cell : row) s += cell.accuracy;
    return s / static_cast<double>(models.size() * models.size());
}

DetectionMatrix run_matrix(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                           ClassifierKind kind) {
    DetectionMatrix matrix;
    for (const auto& s : plan.splits) matrix.models.push_back(s.model_id);
    matrix.cells.resize(matrix.models.size());

    for (std::size_t i = 0; i < matrix.models.size(); ++i) {
        TrainedDetector det;
        try {
            det = train_single_detector(corpus, plan, matrix.models[i], kind);
        } catch (const TraceguardError& e) {
            throw TraceguardError("matrix row " + matrix.models[i] + ": " + e.what());
        }
        for (std::size_t j = 0; j < matrix.models.size(); ++j) {
            std::vector<EvalRow> rows;
            for (std::size_t idx : plan.for_model(matrix.models[j]).test) {
                Prediction p = det.score_trace(corpus[idx]);
                rows.push_back({p.score, p.backdoor, corpus[idx].metadata.label == Label::backdoor,
                                matrix.models[j]});
            }
            matrix.cells[i].push_back(metrics_from_rows(rows));
        }
    }
    return matrix;
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::single: return "single";
        case Strategy::pooled: return "pooled";
        case Strategy::voting: return "voting";
        default: return "model_aware";
    }
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "single") return Strategy::single;
    if (s == "pooled") return Strategy::pooled;
    if (s == "voting") return Strategy::voting;
    if (s == "model_aware") return Strategy::model_aware;
    return std::nullopt;
}

StrategyResult run_strategy(const std::vector<ExecutionTrace>& corpus, const SplitPlan& plan,
                            Strategy strategy, ClassifierKind kind, const DetectionMatrix* matrix) {
    StrategyResult result;
    result.strategy = strategy;

    if (strategy == Strategy::single) {
        DetectionMatrix local;
        if (matrix == nullptr) {
            local = run_matrix(corpus, plan, kind);
            matrix = &local;
        }
        result.same_model_acc = matrix->diagonal_mean();
        result.cross_model_acc = matrix->off_diagonal_mean();
        result.overall_acc = matrix->overall_mean();
        result.gap = matrix->gap();
        for (std::size_t i = 0; i < matrix->models.size(); ++i)
            result.per_model[matrix->models[i]] = matrix->cells[i][i];
        return result;
    }

    std::vector<EvalRow> rows;
    if (strategy == Strategy::voting) {
        std::vector<TrainedDetector> detectors;
        for (const auto& s : plan.splits)
            detectors.push_back(train_single_detector(corpus, plan, s.model_id, kind));
        const std::size_t m = detectors.size();
        for (const auto& s : plan.splits) {
            for (std::size_t idx : s.test) {
                int votes = 0;
                for (const auto& det : detectors)
                    votes += det.score_trace(corpus[idx]).backdoor ? 1 : 0;
                // majority vote; an even split goes to backdoor
                bool predicted = 2 * static_cast<std::size_t>(votes) >= m;
                rows.push_back({static_cast<double>(votes) / static_cast<double>(m), predicted,
                                corpus[idx].metadata.label == Label::backdoor, s.model_id});
            }
        }
    } else {
        TrainedDetector det =
            train_pooled_detector(corpus, plan, kind, strategy == Strategy::model_aware);
        for (const auto& s : plan.splits) {
            for (std::size_t idx : s.test) {
                Prediction p = det.score_trace(corpus[idx]);
                rows.push_back({p.score, p.backdoor, corpus[idx].metadata.label == Label::backdoor,
                                s.model_id});
            }
        }
    }

    EvalMetrics overall = metrics_from_rows(rows);
    result.overall_acc = overall.accuracy;
    // trained on all models: the same/cross distinction collapses by design
    result.same_model_acc = overall.accuracy;
    result.cross_model_acc = overall.accuracy;
    result.gap = 0.0;
    for (const auto& s : plan.splits) {
        std::vector<EvalRow> model_rows;
        for (const auto& r : rows)
            if (r.model_id == s.model_id) model_rows.push_back(r);
        result.per_model[s.model_id] = metrics_from_rows(model_rows);
    }
    return result;
}

StabilityReport feature_stability(const std::vector<ExecutionTrace>& corpus) {
    StabilityReport report;
    report.models = corpus_models(corpus);
    if (report.models.size() < 2) throw InsufficientModels("stability analysis needs >= 2 models");

    struct Moments {
        std::array<double, kFeatureCount> mean_all{}, mean_b{}, mean_m{}, var_b{}, var_m{};
        std::size_t n_all = 0, n_b = 0, n_m = 0;
    };
    std::map<std::string, Moments> per_model;
    std::map<std::string, std::vector<FeatureVector>> fvs;
    for (const auto& t : corpus) fvs[t.metadata.model_id].push_back(extract_features(t));

    for (const auto& model_id : report.models) {
        Moments mo;
        std::size_t ti = 0;
        std::vector<const ExecutionTrace*> traces;
        for (const auto& t : corpus)
            if (t.metadata.model_id == model_id) traces.push_back(&t);
        const auto& vecs = fvs[model_id];
        // means
        for (const auto* t : traces) {
            const auto& v = vecs[ti++].values;
            bool backdoor = t->metadata.label == Label::backdoor;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                mo.mean_all[f] += v[f];
                (backdoor ? mo.mean_m[f] : mo.mean_b[f]) += v[f];
            }
            ++mo.n_all;
            (backdoor ? mo.n_m : mo.n_b)++;
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            mo.mean_all[f] /= static_cast<double>(mo.n_all);
            if (mo.n_b > 0) mo.mean_b[f] /= static_cast<double>(mo.n_b);
            if (mo.n_m > 0) mo.mean_m[f] /= static_cast<double>(mo.n_m);
        }
        // population variances per class
        ti = 0;
        for (const auto* t : traces) {
            const auto& v = vecs[ti++].values;
            bool backdoor = t->metadata.label == Label::backdoor;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                double d = v[f] - (backdoor ? mo.mean_m[f] : mo.mean_b[f]);
                (backdoor ? mo.var_m[f] : mo.var_b[f]) += d * d;
            }
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (mo.n_b > 0) mo.var_b[f] /= static_cast<double>(mo.n_b);
            if (mo.n_m > 0) mo.var_m[f] /= static_cast<double>(mo.n_m);
        }
        per_model[model_id] = mo;
    }

    // CV over per-model means of all traces
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        std::vector<double> means;
        for (const auto& model_id : report.models) means.push_back(per_model[model_id].mean_all[f]);
        double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
        if (std::abs(grand) < 1e-9) {
            report.cv[f] = std::nullopt;
            continue;
        }
        double var = 0.0;
        for (double m : means) var += (m - grand) * (m - grand);
        report.cv[f] = std::sqrt(var / static_cast<double>(means.size())) / std::abs(grand);
    }

    // Cohen's d per model per feature, equal-weight pooled sigma
    for (const auto& model_id : report.models) {
        const auto& mo = per_model[model_id];
        std::array<double, kFeatureCount> ds{};
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            double pooled = std::sqrt(0.5 * (mo.var_b[f] + mo.var_m[f]));
            ds[f] = pooled > 1e-12 ? (mo.mean_m[f] - mo.mean_b[f]) / pooled : 0.0;
        }
        report.cohens_d[model_id] = ds;
        StabilityReport::TopFeature top;
        top.model_id = model_id;
        std::size_t best = 0;
        for (std::size_t f = 1; f < kFeatureCount; ++f)
            if (std::abs(ds[f]) > std::abs(ds[best])) best = f;
        top.feature = std::string(feature_names()[best]);
        top.d = ds[best];
        report.top_discriminative.push_back(top);
    }

    // category rollups; a CV reported absent (grand mean ~0) counts as stable
    for (auto cat : {FeatureCategory::temporal, FeatureCategory::sequence, FeatureCategory::action,
                     FeatureCategory::data_flow})
        report.category_rollup[std::string(to_string(cat))] = {};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        auto& roll = report.category_rollup[std::string(to_string(feature_category(f)))];
        ++roll.total;
        double cv = report.cv[f].value_or(0.0);
        if (cv < 0.2) ++roll.stable;
        else if (cv < 0.8) ++roll.moderate;
        else ++roll.unstable;
    }
    return report;
}

ExperimentResults run_experiment(const std::vector<ExecutionTrace>& corpus,
                                 const std::string& manifest_hash, std::uint64_t seed,
                                 ClassifierKind kind, const std::vector<Strategy>& strategies) {
    ExperimentResults results;
    results.seed = seed;
    results.kind = kind;
    results.corpus_manifest_hash = manifest_hash;

    SplitPlan plan = make_splits(corpus, seed);
    results.matrix = run_matrix(corpus, plan, kind);
    for (Strategy s : strategies)
        results.strategies.push_back(run_strategy(corpus, plan, s, kind, &results.matrix));
    results.stability = feature_stability(corpus);

    for (const auto& t : corpus) {
        auto& counts = results.dataset_counts[t.metadata.model_id];
        (t.metadata.label == Label::benign ? counts.first : counts.second)++;
    }
    return results;
}

void emit_reports(const ExperimentResults& results, const std::filesystem::path& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const std::string header = "# corpus_manifest_hash=" + results.corpus_manifest_hash + "\n";
    std::map<std::string, std::string> files;

    // matrix.csv
    {
        std::ostringstream out;
        out << header << "train_model";
        for (const auto& m : results.matrix.models) out << ',' << m;
        out << '\n';
        for (std::size_t i = 0; i < results.matrix.models.size(); ++i) {
            out << results.matrix.models[i];
            for (std::size_t j = 0; j < results.matrix.models.size(); ++j)
                out << ',' << fmt(results.matrix.cells[i][j].accuracy);
            out << '\n';
        }
        files["matrix.csv"] = out.str();
    }
    // matrix.txt (aligned)
    {
        std::ostringstream out;
        out << header;
        std::size_t width = 20;
        out << std::string(width, ' ');
        for (const auto& m : results.matrix.models) {
            out << m;
            out << std::string(m.size() < width ? width - m.size() : 1, ' ');
        }
        out << '\n';
        for (std::size_t i = 0; i < results.matrix.models.size(); ++i) {
            const auto& m = results.matrix.models[i];
            out << m << std::string(m.size() < width ? width - m.size() : 1, ' ');
            for (std::size_t j = 0; j < results.matrix.models.size(); ++j) {
                std::string cell = fmt(results.matrix.cells[i][j].accuracy, "%.3f");
                out << cell << std::string(width - cell.size(), ' ');
            }
            out << '\n';
        }
        out << "\ndiagonal_mean=" << fmt(results.matrix.diagonal_mean())
            << "\noff_diagonal_mean=" << fmt(results.matrix.off_diagonal_mean()) << "\ngap=";
        if (results.matrix.gap()) out << fmt(*results.matrix.gap());
        else out << "n/a";
        out << '\n';
        files["matrix.txt"] = out.str();
    }
    // strategies.csv
    {
        std::ostringstream out;
        out << header << "strategy,same_model_acc,cross_model_acc,overall_acc,gap\n";
        for (const auto& s : results.strategies) {
            out << to_string(s.strategy) << ',' << fmt(s.same_model_acc) << ','
                << fmt(s.cross_model_acc) << ',' << fmt(s.overall_acc) << ',';
            if (s.gap) out << fmt(*s.gap);
            else out << "n/a";
            out << '\n';
        }
        files["strategies.csv"] = out.str();
    }
    // stability.csv
    {
        std::ostringstream out;
        out << header << "feature,category,cv,band\n";
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            out << feature_names()[f] << ',' << to_string(feature_category(f)) << ',';
            if (results.stability.cv[f]) {
                double cv = *results.stability.cv[f];
                out << fmt(cv) << ',' << (cv < 0.2 ? "stable" : cv < 0.8 ? "moderate" : "unstable");
            } else {
                out << "n/a,stable";
            }
            out << '\n';
        }
        out << "\n# category rollup: category,total,stable,moderate,unstable\n";
        for (const auto& [cat, roll] : results.stability.category_rollup)
            out << cat << ',' << roll.total << ',' << roll.stable << ',' << roll.moderate << ','
                << roll.unstable << '\n';
        files["stability.csv"] = out.str();
    }
    // cohens_d.csv
    {
        std::ostringstream out;
        out << header << "feature";
        for (const auto& m : results.stability.models) out << ',' << m;
        out << '\n';
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            out << feature_names()[f];
            for (const auto& m : results.stability.models)
                out << ',' << fmt(results.stability.cohens_d.at(m)[f]);
            out << '\n';
        }
        out << "\n# top |d| per model: model,feature,d\n";
        for (const auto& top : results.stability.top_discriminative)
            out << top.model_id << ',' << top.feature << ',' << fmt(top.d) << '\n';
        files["cohens_d.csv"] = out.str();
    }
    // precision_recall.csv (model-aware breakdown when present, else first strategy with one)
    {
        std::ostringstream out;
        out << header << "model,precision,recall,f1,accuracy,auc_roc,tp,fp,tn,fn\n";
        const StrategyResult* source = nullptr;
        for (const auto& s : results.strategies)
            if (s.strategy == Strategy::model_aware) source = &s;
        if (source == nullptr && !results.strategies.empty()) source = &results.strategies.front();
        if (source != nullptr) {
            for (const auto& [model_id, m] : source->per_model) {
                out << model_id << ',' << fmt(m.precision) << ',' << fmt(m.recall) << ','
                    << fmt(m.f1) << ',' << fmt(m.accuracy) << ',';
                if (m.auc_roc) out << fmt(*m.auc_roc);
                else out << "n/a";
                out << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn << '\n';
            }
        }
        files["precision_recall.csv"] = out.str();
    }
    // dataset_summary.csv
    {
        std::ostringstream out;
        out << header << "model,benign,backdoor,total\n";
        int grand = 0;
        for (const auto& [model_id, counts] : results.dataset_counts) {
            out << model_id << ',' << counts.first << ',' << counts.second << ','
                << (counts.first + counts.second) << '\n';
            grand += counts.first + counts.second;
        }
        out << "TOTAL,,," << grand << '\n';
        files["dataset_summary.csv"] = out.str();
    }

    // pipeline hash over all report bodies, recorded in manifest.json
    std::uint64_t pipeline_hash = 0xcbf29ce484222325ull;
    for (const auto& [name, content] : files) {
        pipeline_hash = fnv1a64(name, pipeline_hash);
        pipeline_hash = fnv1a64(content, pipeline_hash);
    }

    ordered_json manifest;
    manifest["seed"] = results.seed;
    manifest["classifier"] = std::string(to_string(results.kind));
    manifest["corpus_manifest_hash"] = results.corpus_manifest_hash;
    manifest["diagonal_mean"] = results.matrix.diagonal_mean();
    manifest["off_diagonal_mean"] = results.matrix.off_diagonal_mean();
    if (results.matrix.gap()) manifest["gap"] = *results.matrix.gap();
    manifest["strategies"] = ordered_json::array();
    for (const auto& s : results.strategies)
        manifest["strategies"].push_back(ordered_json{{"name", std::string(to_string(s.strategy))},
                                                      {"same_model_acc", s.same_model_acc},
                                                      {"cross_model_acc", s.cross_model_acc},
                                                      {"overall_acc", s.overall_acc}});
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(pipeline_hash));
    manifest["pipeline_hash"] = std::string(buf);
    files["manifest.json"] = manifest.dump(2) + "\n";

    for (const auto& [name, content] : files) atomic_write_file(outdir / name, content);
}

}  // namespace traceguard
