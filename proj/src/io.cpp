#include "kelp/io.hpp"

#include "kelp/embedding.hpp"
#include "kelp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

namespace kelp {

namespace {

using nlohmann::json;

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<QAItem> read_questions(const std::filesystem::path& path) {
    std::vector<QAItem> items;
    for_each_json_line(path, [&](const json& j) {
        QAItem item;
        item.id = j.at("id").get<std::string>();
        item.question = j.at("question").get<std::string>();
        item.entity_surfaces = j.value("entities", std::vector<std::string>{});
        item.gold_answer = j.value("answer", std::string());
        auto kind = j.value("task_kind", std::string("qa"));
        if (kind == "qa") item.task_kind = TaskKind::Qa;
        else if (kind == "claim") item.task_kind = TaskKind::Claim;
        else throw std::invalid_argument("unknown task_kind \"" + kind + "\"");
        if (item.question.empty()) throw std::invalid_argument("empty question");
        items.push_back(std::move(item));
    });
    return items;
}

std::vector<Demonstration> read_few_shot(const std::filesystem::path& path) {
    std::vector<Demonstration> demos;
    for_each_json_line(path, [&](const json& j) {
        demos.push_back({j.at("question").get<std::string>(), j.value("context", std::vector<std::string>{}),
                         j.at("answer").get<std::string>()});
    });
    return demos;
}

std::vector<LabeledSample> read_trainset(const std::filesystem::path& path) {
    std::vector<LabeledSample> samples;
    for_each_json_line(path, [&](const json& j) {
        auto label = j.at("label").get<int>();
        if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
        samples.push_back({j.at("question").get<std::string>(), j.at("path_sentence").get<std::string>(),
                           label == 1 ? Label::Positive : Label::Negative});
    });
    return samples;
}

nlohmann::json triple_json(const KnowledgeGraph& g, const Triple& t) {
    return json::array({g.entity(t.head), g.relation(t.relation), g.entity(t.tail)});
}

namespace {

json triples_json(const KnowledgeGraph& g, const KnowledgePath& p) {
    json out = json::array();
    for (const auto& t : p.triples) out.push_back(triple_json(g, t));
    return out;
}

}  // namespace

nlohmann::json selection_record(const KnowledgeGraph& g, const std::string& id, const SelectionResult& result) {
    json record;
    record["id"] = id;
    record["gamma"] = std::isfinite(result.gamma) ? json(result.gamma) : json(nullptr);
    json triplets = json::array();
    for (const auto& t : result.selected_triplets) triplets.push_back(triple_json(g, t));
    record["selected_triplets"] = std::move(triplets);
    json paths = json::array();
    for (const auto& sp : result.paths) {
        paths.push_back({{"sentence", sp.sentence}, {"score", sp.score}, {"triples", triples_json(g, sp.path)}});
    }
    record["paths"] = std::move(paths);
    return record;
}

nlohmann::json path_record(const KnowledgeGraph& g, const std::string& id, const PathSet& ps) {
    json paths = json::array();
    for (const auto& p : ps.paths) {
        paths.push_back({{"sentence", path_sentence(g, p)}, {"triples", triples_json(g, p)}});
    }
    return {{"id", id}, {"paths", std::move(paths)}};
}

nlohmann::json sample_record(const LabeledSample& sample) {
    return {{"question", sample.question},
            {"path_sentence", sample.path_sentence},
            {"label", sample.label == Label::Positive ? 1 : 0}};
}

std::string config_hash(const nlohmann::json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& r : records) out << r.dump() << '\n';
    if (!out) throw InputError("failed writing " + path.string());
}

void write_meta(const std::filesystem::path& path, const std::string& command, const nlohmann::json& config) {
    auto meta_path = path;
    meta_path += ".meta.json";
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + meta_path.string());
    json meta{{"tool", "kelp"},
              {"version", kToolVersion},
              {"command", command},
              {"config_hash", config_hash(config)},
              {"config", config}};
    out << meta.dump(2) << '\n';
}

std::string stamp_line(const std::string& command, const nlohmann::json& config) {
    return std::string("# kelp ") + kToolVersion + " command=" + command + " config=" + config_hash(config);
}

}  // namespace kelp
