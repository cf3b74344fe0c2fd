#include "kelp/encoder.hpp"
#include "kelp/errors.hpp"
#include "kelp/io.hpp"
#include "kelp/parallel.hpp"
#include "kelp/paths.hpp"
#include "kelp/pipeline.hpp"
#include "kelp/selection.hpp"
#include "kelp/trainset.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

const json& defaults() {
    static const json d = {
        {"graph", ""},        {"questions", ""},    {"output", ""},       {"provider", "builtin-hash"},
        {"relation_provider", ""}, {"k1", 4},       {"k2", 4},            {"k_rel", 16},
        {"margin", 0.1},      {"lr", 0.1},          {"epochs", 100},      {"seed", 0},
        {"init_scale", 0.1},  {"dim", 32},          {"hash_dim", 1024},   {"jobs", 1},
        {"shots", 0},         {"few_shot", ""},     {"preamble", ""},     {"relation_only", false},
        {"claim_recheck", false}, {"no_context", false}, {"llm", ""},     {"fraction", 0.2},
        {"trainset", ""},     {"predictions", ""},  {"report", ""},       {"loss_trace", ""},
        {"max_pairs", 16},
    };
    return d;
}

std::string dashed(std::string key) {
    for (auto& c : key) {
        if (c == '_') c = '-';
    }
    return "--" + key;
}

// Flags are held as optionals so that only values given on the command line
// override the config file.
struct Command {
    CLI::App* app = nullptr;
    std::vector<std::string> keys;
    std::vector<std::function<void(json&)>> overrides;

    template <typename T>
    void option(const std::string& key, const std::string& help) {
        auto value = std::make_shared<std::optional<T>>();
        app->add_option(dashed(key), *value, help);
        keys.push_back(key);
        overrides.push_back([key, value](json& cfg) {
            if (*value) cfg[key] = **value;
        });
    }

    void flag(const std::string& key, const std::string& help) {
        auto value = std::make_shared<bool>(false);
        auto* opt = app->add_flag(dashed(key), *value, help);
        keys.push_back(key);
        overrides.push_back([key, value, opt](json& cfg) {
            if (opt->count() > 0) cfg[key] = *value;
        });
    }
};

json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw kelp::InputError("cannot open config " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw kelp::InputError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw kelp::InputError("config " + path + ": expected a JSON object");
    for (const auto& [key, _] : cfg.items()) {
        if (!defaults().contains(key)) throw kelp::InputError("config " + path + ": unknown key \"" + key + "\"");
    }
    return cfg;
}

// Effective settings for one command: defaults, then the config file, then flags.
json resolve(const Command& cmd, const std::string& config_path) {
    json file = config_path.empty() ? json::object() : load_config_file(config_path);
    json cfg = json::object();
    for (const auto& key : cmd.keys) {
        cfg[key] = file.contains(key) ? file[key] : defaults().at(key);
    }
    for (const auto& apply : cmd.overrides) apply(cfg);
    return cfg;
}

// Settings recorded in stamps and sidecars. Output destinations are left out
// so the same run written to two places carries the same stamp.
json recorded(const json& cfg) {
    json out = cfg;
    for (const char* key : {"output", "report", "loss_trace"}) out.erase(key);
    return out;
}

template <typename T>
T get(const json& cfg, const std::string& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw kelp::InputError("setting \"" + key + "\" has the wrong type");
    }
}

std::string require_path(const json& cfg, const std::string& key) {
    auto value = get<std::string>(cfg, key);
    if (value.empty()) throw kelp::InputError(dashed(key) + " is required");
    return value;
}

void report_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

kelp::SelectionConfig selection_config(const json& cfg) {
    kelp::SelectionConfig sc;
    sc.k1 = get<int>(cfg, "k1");
    sc.k2 = get<int>(cfg, "k2");
    if (sc.k1 < 1 || sc.k2 < 1) throw kelp::InputError("--k1 and --k2 must be at least 1");
    return sc;
}

int jobs_of(const json& cfg) {
    auto jobs = get<int>(cfg, "jobs");
    if (jobs < 1) throw kelp::InputError("--jobs must be at least 1");
    return jobs;
}

kelp::KnowledgeGraph load_graph_reporting(const json& cfg) {
    kelp::LoadReport report;
    auto g = kelp::load_graph(std::filesystem::path(require_path(cfg, "graph")), &report);
    report_warnings(report.warnings);
    return g;
}

std::unique_ptr<kelp::EmbeddingProvider> provider_of(const json& cfg, const std::string& key) {
    auto spec = get<std::string>(cfg, key);
    try {
        return kelp::make_provider(spec);
    } catch (const std::invalid_argument& e) {
        throw kelp::InputError(dashed(key) + ": " + e.what());
    }
}

std::unique_ptr<kelp::LLMProvider> llm_of(const json& cfg) {
    try {
        return kelp::make_llm(require_path(cfg, "llm"));
    } catch (const std::invalid_argument& e) {
        throw kelp::InputError(std::string("--llm: ") + e.what());
    }
}

void write_records(const json& cfg, const std::string& command, const std::vector<json>& records) {
    std::filesystem::path out = require_path(cfg, "output");
    kelp::write_jsonl(out, records);
    kelp::write_meta(out, command, recorded(cfg));
}

// ---------------------------------------------------------------------------

int run_extract(const json& cfg) {
    auto g = load_graph_reporting(cfg);
    auto items = kelp::read_questions(require_path(cfg, "questions"));
    std::vector<json> records(items.size());
    std::vector<std::vector<std::string>> warnings(items.size());
    kelp::parallel_for(items.size(), jobs_of(cfg), [&](std::size_t i) {
        auto ps = kelp::aggregate_question_paths(g, items[i].entity_surfaces, &warnings[i]);
        records[i] = kelp::path_record(g, items[i].id, ps);
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (const auto& w : warnings[i]) std::cerr << "warning: " << items[i].id << ": " << w << '\n';
    }
    write_records(cfg, "extract", records);
    return 0;
}

int run_select(const json& cfg) {
    auto g = load_graph_reporting(cfg);
    auto items = kelp::read_questions(require_path(cfg, "questions"));
    auto sc = selection_config(cfg);
    auto provider = provider_of(cfg, "provider");
    bool relation_only = get<bool>(cfg, "relation_only");
    auto k_rel = get<int>(cfg, "k_rel");
    std::unique_ptr<kelp::EmbeddingProvider> relation_provider;
    if (relation_only) {
        if (k_rel < 1) throw kelp::InputError("--k-rel must be at least 1");
        relation_provider = get<std::string>(cfg, "relation_provider").empty() ? provider_of(cfg, "provider")
                                                                                : provider_of(cfg, "relation_provider");
    }
    int jobs = provider->concurrent() ? jobs_of(cfg) : 1;

    std::vector<json> records(items.size());
    std::vector<std::vector<std::string>> warnings(items.size());
    kelp::parallel_for(items.size(), jobs, [&](std::size_t i) {
        auto ps = kelp::aggregate_question_paths(g, items[i].entity_surfaces, &warnings[i]);
        auto result = relation_only
                          ? kelp::relation_only_select(g, items[i].question, ps, *provider, *relation_provider, sc, k_rel)
                          : kelp::select_paths(g, items[i].question, ps, *provider, sc);
        records[i] = kelp::selection_record(g, items[i].id, result);
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (const auto& w : warnings[i]) std::cerr << "warning: " << items[i].id << ": " << w << '\n';
    }
    write_records(cfg, "select", records);
    return 0;
}

int run_train_encoder(const json& cfg) {
    auto samples = kelp::read_trainset(require_path(cfg, "trainset"));
    auto max_pairs = get<int>(cfg, "max_pairs");
    if (max_pairs < 1) throw kelp::InputError("--max-pairs must be at least 1");
    auto seed = get<std::uint64_t>(cfg, "seed");
    auto pairs = kelp::make_training_pairs(samples, static_cast<std::size_t>(max_pairs), seed);
    if (pairs.empty()) throw kelp::InputError("training set yields no positive/negative pairs");

    kelp::TrainConfig tc;
    tc.margin = get<double>(cfg, "margin");
    tc.learning_rate = get<double>(cfg, "lr");
    tc.epochs = get<int>(cfg, "epochs");
    tc.seed = seed;
    tc.init_scale = get<double>(cfg, "init_scale");
    auto dim = get<int>(cfg, "dim");
    auto hash_dim = get<int>(cfg, "hash_dim");
    if (dim < 1) throw kelp::InputError("--dim must be at least 1");
    if (hash_dim < 2 || (hash_dim & (hash_dim - 1)) != 0) throw kelp::InputError("--hash-dim must be a power of two");
    if (tc.epochs < 0) throw kelp::InputError("--epochs must be non-negative");

    auto result = kelp::train(static_cast<std::size_t>(dim), static_cast<std::size_t>(hash_dim), pairs, tc);
    auto stamp = kelp::stamp_line("train-encoder", recorded(cfg));

    std::filesystem::path out = require_path(cfg, "output");
    {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw kelp::InputError("cannot write " + out.string());
        f << stamp << '\n';
        kelp::save_encoder(result.encoder, f);
        if (!f) throw kelp::InputError("failed writing " + out.string());
    }

    std::filesystem::path trace = get<std::string>(cfg, "loss_trace");
    if (trace.empty()) trace = out.string() + ".loss.csv";
    {
        std::ofstream f(trace, std::ios::binary);
        if (!f) throw kelp::InputError("cannot write " + trace.string());
        f << stamp << '\n' << "epoch,loss\n";
        char buf[64];
        for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, result.loss_trace[e]);
            f << buf;
        }
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", result.loss_trace.size(), result.final_loss);
        f << buf;
    }

    std::cout << "pairs " << pairs.size() << " final_loss " << result.final_loss << " ranking_accuracy "
              << kelp::ranking_accuracy(result.encoder, pairs) << '\n';
    return 0;
}

int run_build_trainset(const json& cfg) {
    auto g = load_graph_reporting(cfg);
    auto items = kelp::read_questions(require_path(cfg, "questions"));
    auto llm = llm_of(cfg);
    kelp::TrainsetOptions options;
    options.sample_fraction = get<double>(cfg, "fraction");
    options.seed = get<std::uint64_t>(cfg, "seed");
    options.jobs = jobs_of(cfg);
    if (!(options.sample_fraction > 0.0 && options.sample_fraction <= 1.0)) {
        throw kelp::InputError("--fraction must be in (0, 1]");
    }

    auto result = kelp::build_training_set(*llm, g, items, options);
    report_warnings(result.report.warnings);

    std::vector<json> records;
    for (const auto& s : result.samples) records.push_back(kelp::sample_record(s));
    write_records(cfg, "build-trainset", records);

    std::filesystem::path report_path = get<std::string>(cfg, "report");
    if (report_path.empty()) report_path = require_path(cfg, "output") + ".report.json";
    const auto& r = result.report;
    json report{{"stamp", kelp::stamp_line("build-trainset", recorded(cfg))},
                {"screened", r.screened},
                {"failed_no_context", r.failed_no_context},
                {"probes", r.probes},
                {"positives", r.positives},
                {"negatives", r.negatives},
                {"skipped", r.skipped},
                {"warnings", r.warnings}};
    std::ofstream f(report_path, std::ios::binary);
    if (!f) throw kelp::InputError("cannot write " + report_path.string());
    f << report.dump(2) << '\n';
    return 0;
}

int run_answer(const json& cfg) {
    auto g = load_graph_reporting(cfg);
    auto items = kelp::read_questions(require_path(cfg, "questions"));
    auto llm = llm_of(cfg);

    kelp::AnswerOptions options;
    options.selection = selection_config(cfg);
    options.use_context = !get<bool>(cfg, "no_context");
    options.relation_only = get<bool>(cfg, "relation_only");
    options.k_rel = get<int>(cfg, "k_rel");
    options.claim_recheck = get<bool>(cfg, "claim_recheck");
    options.preamble = get<std::string>(cfg, "preamble");
    if (options.relation_only && options.k_rel < 1) throw kelp::InputError("--k-rel must be at least 1");

    auto shots = get<int>(cfg, "shots");
    if (shots < 0) throw kelp::InputError("--shots must be non-negative");
    if (shots > 0) {
        auto demos = kelp::read_few_shot(require_path(cfg, "few_shot"));
        if (static_cast<std::size_t>(shots) > demos.size()) {
            throw kelp::InputError("--shots " + std::to_string(shots) + " exceeds the " +
                                   std::to_string(demos.size()) + " demonstrations available");
        }
        demos.resize(static_cast<std::size_t>(shots));
        options.few_shot = std::move(demos);
    }

    auto provider = provider_of(cfg, "provider");
    std::unique_ptr<kelp::EmbeddingProvider> relation_provider;
    if (options.relation_only) {
        relation_provider = get<std::string>(cfg, "relation_provider").empty() ? provider_of(cfg, "provider")
                                                                                : provider_of(cfg, "relation_provider");
    }

    std::vector<kelp::Prediction> predictions(items.size());
    kelp::parallel_for(items.size(), jobs_of(cfg), [&](std::size_t i) {
        predictions[i] = kelp::answer_question(*llm, g, items[i], *provider, relation_provider.get(), options);
    });

    std::vector<json> records;
    for (const auto& p : predictions) {
        for (const auto& w : p.warnings) std::cerr << "warning: " << p.id << ": " << w << '\n';
        records.push_back({{"id", p.id}, {"answer", p.answer}, {"context", p.context}});
    }
    write_records(cfg, "answer", records);
    return 0;
}

int run_eval(const json& cfg) {
    auto items = kelp::read_questions(require_path(cfg, "questions"));
    std::filesystem::path pred_path = require_path(cfg, "predictions");
    std::ifstream in(pred_path, std::ios::binary);
    if (!in) throw kelp::InputError("cannot open " + pred_path.string());

    std::map<std::string, std::string> predictions;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            predictions[j.at("id").get<std::string>()] = j.at("answer").get<std::string>();
        } catch (const json::exception& e) {
            throw kelp::InputError(pred_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }

    auto report = kelp::evaluate(items, predictions);
    if (report.missing > 0) {
        std::cerr << "warning: " << report.missing << " question(s) have no prediction\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", report.accuracy());
    std::cout << "accuracy " << buf << " (" << report.correct << "/" << report.total << ")\n";

    auto out = get<std::string>(cfg, "output");
    if (!out.empty()) {
        json j{{"stamp", kelp::stamp_line("eval", recorded(cfg))},
               {"accuracy", report.accuracy()},
               {"correct", report.correct},
               {"total", report.total},
               {"missing", report.missing}};
        std::ofstream f(out, std::ios::binary);
        if (!f) throw kelp::InputError("cannot write " + out);
        f << j.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph path selection for LLM prompting"};
    app.set_version_flag("--version", kelp::kToolVersion);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    std::map<std::string, Command> commands;
    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        auto& cmd = commands[name];
        cmd.app = app.add_subcommand(name, help);
        cmd.app->fallthrough();
        return cmd;
    };
    auto add_selection = [](Command& c) {
        c.option<std::string>("provider", "builtin-hash[:H] | encoder:FILE | random:SEED[:DIM] | http(s)://URL");
        c.option<std::string>("relation_provider", "provider for relation-only ranking (defaults to --provider)");
        c.option<int>("k1", "paths kept per sharing triplet");
        c.option<int>("k2", "sharing triplets kept");
        c.option<int>("k_rel", "relation sentences kept in relation-only mode");
        c.flag("relation_only", "two-stage relation-only ranking");
    };

    {
        auto& c = add("extract", "write candidate paths per question");
        c.option<std::string>("graph", "triples TSV");
        c.option<std::string>("questions", "questions JSONL");
        c.option<std::string>("output", "output JSONL");
        c.option<int>("jobs", "worker threads");
    }
    {
        auto& c = add("select", "write selected paths per question");
        c.option<std::string>("graph", "triples TSV");
        c.option<std::string>("questions", "questions JSONL");
        c.option<std::string>("output", "output JSONL");
        add_selection(c);
        c.option<int>("jobs", "worker threads");
    }
    {
        auto& c = add("train-encoder", "fit a linear path encoder on labeled samples");
        c.option<std::string>("trainset", "labeled samples JSONL");
        c.option<std::string>("output", "encoder weights file");
        c.option<std::string>("loss_trace", "loss CSV (default <output>.loss.csv)");
        c.option<int>("dim", "embedding dimension");
        c.option<int>("hash_dim", "hashed feature dimension (power of two)");
        c.option<double>("margin", "hinge margin");
        c.option<double>("lr", "learning rate");
        c.option<int>("epochs", "gradient steps");
        c.option<std::uint64_t>("seed", "initialization and pair sampling seed");
        c.option<double>("init_scale", "initial weight scale");
        c.option<int>("max_pairs", "training pairs per question");
    }
    {
        auto& c = add("build-trainset", "label candidate paths by probing the LLM");
        c.option<std::string>("graph", "triples TSV");
        c.option<std::string>("questions", "questions JSONL");
        c.option<std::string>("llm", "mock:RULES.json | http(s)://URL");
        c.option<std::string>("output", "labeled samples JSONL");
        c.option<std::string>("report", "report JSON (default <output>.report.json)");
        c.option<double>("fraction", "fraction of questions screened");
        c.option<std::uint64_t>("seed", "subsample seed");
        c.option<int>("jobs", "concurrent probes");
    }
    {
        auto& c = add("answer", "answer questions with selected knowledge as context");
        c.option<std::string>("graph", "triples TSV");
        c.option<std::string>("questions", "questions JSONL");
        c.option<std::string>("llm", "mock:RULES.json | http(s)://URL");
        c.option<std::string>("output", "predictions JSONL");
        add_selection(c);
        c.flag("claim_recheck", "re-ask claims judged False without context");
        c.flag("no_context", "ask without any knowledge context");
        c.option<int>("shots", "number of demonstrations");
        c.option<std::string>("few_shot", "demonstrations JSONL");
        c.option<std::string>("preamble", "text placed before the demonstrations");
        c.option<int>("jobs", "worker threads");
    }
    {
        auto& c = add("eval", "score predictions against gold answers");
        c.option<std::string>("questions", "questions JSONL with gold answers");
        c.option<std::string>("predictions", "predictions JSONL");
        c.option<std::string>("output", "report JSON");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (auto& [name, cmd] : commands) {
            if (!cmd.app->parsed()) continue;
            auto cfg = resolve(cmd, config_path);
            if (name == "extract") return run_extract(cfg);
            if (name == "select") return run_select(cfg);
            if (name == "train-encoder") return run_train_encoder(cfg);
            if (name == "build-trainset") return run_build_trainset(cfg);
            if (name == "answer") return run_answer(cfg);
            if (name == "eval") return run_eval(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
