// tg — trace backdoor detection toolkit.
//
// Subcommands: generate, extract, train, score, experiment. Every command is
// deterministic given its inputs and --seed. Exit codes: 0 ok, 2 config,
// 3 generation, 4 modeling, 5 I/O.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "traceguard/errors.hpp"
#include "traceguard/harness.hpp"
#include "traceguard/registry.hpp"
#include "traceguard/synth.hpp"
#include "traceguard/trace_io.hpp"

namespace tgd = traceguard;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitModeling = 4;
constexpr int kExitIo = 5;

struct Options {
    std::string corpus;
    std::string out;
    std::uint64_t seed = 42;
    std::string classifier = "forest";
    std::string strategies = "single,pooled,voting,model_aware";
    int per_model = 0;
    std::string profiles;
    std::string attack_config;
    bool model_aware = false;
    std::string model_file;
    std::string train_source = "pooled";  // model id or "pooled"
    double tm1_fraction = 0.5;
};

std::uint64_t env_seed_default() {
    // TG_SEED overrides the built-in default; --seed still wins.
    if (const char* env = std::getenv("TG_SEED")) return std::strtoull(env, nullptr, 10);
    return 42;
}

tgd::ClassifierKind parse_kind(const std::string& s) {
    if (s == "forest") return tgd::ClassifierKind::forest;
    if (s == "svm") return tgd::ClassifierKind::svm;
    throw tgd::TraceguardError("unknown classifier: " + s + " (expected forest|svm)");
}

std::vector<tgd::Strategy> parse_strategies(const std::string& csv) {
    std::vector<tgd::Strategy> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string token = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!token.empty()) {
            auto s = tgd::parse_strategy(token);
            if (!s) throw tgd::TraceguardError("unknown strategy: " + token);
            out.push_back(*s);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw tgd::TraceguardError("no strategies selected");
    return out;
}

std::vector<tgd::ModelProfile> resolve_profiles(const Options& opt) {
    if (opt.profiles.empty()) return tgd::default_profiles();
    return tgd::load_profiles(opt.profiles);
}

std::vector<tgd::ExecutionTrace> load_corpus_or_die(const std::string& path) {
    auto result = tgd::load_corpus(path);
    for (const auto& err : result.errors)
        std::cerr << "warning: skipped " << err.file << ": " << err.message << "\n";
    if (result.traces.empty()) throw tgd::TraceguardError("no traces found under " + path);
    return std::move(result.traces);
}

int cmd_generate(const Options& opt) {
    auto profiles = resolve_profiles(opt);
    tgd::CorpusSpec spec = opt.per_model > 0
                               ? tgd::CorpusSpec::uniform(opt.per_model, opt.per_model, opt.seed)
                               : tgd::CorpusSpec::defaults(opt.seed);
    spec.tm1_fraction = opt.tm1_fraction;

    tgd::AttackConfig tm1 = tgd::default_attack(tgd::ThreatModel::TM1);
    tgd::AttackConfig tm2 = tgd::default_attack(tgd::ThreatModel::TM2);
    const tgd::AttackConfig *tm1p = nullptr, *tm2p = nullptr;
    if (!opt.attack_config.empty()) {
        tm1 = tgd::load_attack_config(opt.attack_config, tgd::ThreatModel::TM1);
        tm2 = tgd::load_attack_config(opt.attack_config, tgd::ThreatModel::TM2);
        tm1p = &tm1;
        tm2p = &tm2;
    }

    tgd::CorpusManifest manifest = tgd::generate_corpus(spec, profiles, opt.out, tm1p, tm2p);
    std::cout << "corpus written to " << opt.out << "\n";
    for (const auto& [model, counts] : manifest.per_model_counts)
        std::cout << "  " << model << ": " << counts.first << " benign, " << counts.second
                  << " backdoor\n";
    std::cout << "total traces: " << manifest.total_traces << "\n"
              << "manifest hash: " << tgd::corpus_manifest_hash(opt.out) << "\n";
    return 0;
}

int cmd_extract(const Options& opt) {
    auto corpus = load_corpus_or_die(opt.corpus);
    tgd::BigramSet reference;
    {
        std::vector<tgd::ExecutionTrace> benign;
        for (const auto& t : corpus)
            if (t.metadata.label == tgd::Label::benign) benign.push_back(t);
        reference = tgd::collect_benign_bigrams(benign);
    }
    std::vector<tgd::FeatureVector> vectors;
    for (const auto& t : corpus) {
        tgd::FeatureVector fv = tgd::extract_features(t, &reference);
        if (opt.model_aware) fv = tgd::append_model_code(fv, t.metadata.model_id);
        vectors.push_back(std::move(fv));
    }
    std::string csv = tgd::feature_matrix_csv(corpus, vectors);
    if (opt.out.empty())
        std::cout << csv;
    else {
        tgd::atomic_write_file(opt.out, csv);
        std::cout << "features written to " << opt.out << " (" << corpus.size() << " rows)\n";
    }
    return 0;
}

int cmd_train(const Options& opt) {
    auto corpus = load_corpus_or_die(opt.corpus);
    tgd::SplitPlan plan = tgd::make_splits(corpus, opt.seed);
    tgd::ClassifierKind kind = parse_kind(opt.classifier);
    tgd::TrainedDetector det =
        (opt.train_source == "pooled" || opt.model_aware)
            ? tgd::train_pooled_detector(corpus, plan, kind, opt.model_aware)
            : tgd::train_single_detector(corpus, plan, opt.train_source, kind);
    tgd::save_detector(det, opt.out);
    std::cout << "detector (" << det.source << ", " << opt.classifier << ", dim "
              << tgd::model_dim(det.model) << ") written to " << opt.out << "\n";
    return 0;
}

int cmd_score(const Options& opt) {
    tgd::TrainedDetector det = tgd::load_detector(opt.model_file);
    auto corpus = load_corpus_or_die(opt.corpus);
    std::cout << "trace_id,score,predicted,label\n";
    for (const auto& t : corpus) {
        tgd::Prediction p = det.score_trace(t);
        std::cout << t.metadata.trace_id << ',' << p.score << ','
                  << (p.backdoor ? "backdoor" : "benign") << ','
                  << tgd::to_string(t.metadata.label) << "\n";
    }
    return 0;
}

int cmd_experiment(const Options& opt) {
    auto corpus = load_corpus_or_die(opt.corpus);
    std::string hash = tgd::corpus_manifest_hash(opt.corpus);
    tgd::ExperimentResults results = tgd::run_experiment(
        corpus, hash, opt.seed, parse_kind(opt.classifier), parse_strategies(opt.strategies));
    tgd::emit_reports(results, opt.out);
    std::cout << "reports written to " << opt.out << "\n"
              << "diagonal mean: " << results.matrix.diagonal_mean() << "\n"
              << "off-diagonal mean: " << results.matrix.off_diagonal_mean() << "\n";
    if (results.matrix.gap()) std::cout << "gap: " << *results.matrix.gap() << "\n";
    for (const auto& s : results.strategies)
        std::cout << tgd::to_string(s.strategy) << " overall: " << s.overall_acc << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tg — behavioral backdoor detection for agent execution traces"};
    app.require_subcommand(1);
    Options opt;
    opt.seed = env_seed_default();

    auto* gen = app.add_subcommand("generate", "Generate a synthetic labeled trace corpus");
    gen->add_option("--out", opt.out, "Output corpus directory")->required();
    gen->add_option("--seed", opt.seed, "Master seed");
    gen->add_option("--per-model", opt.per_model, "Uniform benign/backdoor count per model");
    gen->add_option("--profiles", opt.profiles, "Model profile JSON")->check(CLI::ExistingFile);
    gen->add_option("--attack-config", opt.attack_config, "Attack config JSON")->check(CLI::ExistingFile);
    gen->add_option("--tm1-fraction", opt.tm1_fraction, "Fraction of backdoors using threat model 1");

    auto* ext = app.add_subcommand("extract", "Extract the feature matrix as CSV");
    ext->add_option("--corpus", opt.corpus, "Corpus directory")->required();
    ext->add_option("--out", opt.out, "Output CSV path (stdout when omitted)");
    ext->add_flag("--model-aware", opt.model_aware, "Append the model-identity feature");

    auto* trn = app.add_subcommand("train", "Train a detector and save it");
    trn->add_option("--corpus", opt.corpus, "Corpus directory")->required();
    trn->add_option("--out", opt.out, "Output detector file")->required();
    trn->add_option("--model", opt.train_source, "Training source: a model id or 'pooled'");
    trn->add_option("--seed", opt.seed, "Split/training seed");
    trn->add_option("--classifier", opt.classifier, "forest|svm");
    trn->add_flag("--model-aware", opt.model_aware, "Pooled training with the model-identity feature");

    auto* sco = app.add_subcommand("score", "Score traces with a saved detector");
    sco->add_option("--model-file", opt.model_file, "Detector file")->required()->check(CLI::ExistingFile);
    sco->add_option("--corpus", opt.corpus, "Corpus directory or single trace file")->required();

    auto* exp = app.add_subcommand("experiment", "Run the full cross-model study and emit reports");
    exp->add_option("--corpus", opt.corpus, "Corpus directory")->required();
    exp->add_option("--out", opt.out, "Report output directory")->required();
    exp->add_option("--seed", opt.seed, "Split/training seed");
    exp->add_option("--classifier", opt.classifier, "forest|svm");
    exp->add_option("--strategies", opt.strategies, "Comma list: single,pooled,voting,model_aware");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_generate(opt);
        if (ext->parsed()) return cmd_extract(opt);
        if (trn->parsed()) return cmd_train(opt);
        if (sco->parsed()) return cmd_score(opt);
        return cmd_experiment(opt);
    } catch (const tgd::ValidationExhausted& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return kExitGeneration;
    } catch (const tgd::TargetsBelowBenignMean& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return kExitGeneration;
    } catch (const tgd::IoFailure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const tgd::DimensionMismatch& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::VersionMismatch& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::MalformedModel& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::DegenerateLabels& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::NonFiniteInput& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::InsufficientData& e) {
        std::cerr << "modeling error: " << e.what() << "\n";
        return kExitModeling;
    } catch (const tgd::TraceguardError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
