#pragma once

#include "kelp/kg_store.hpp"
#include "kelp/llm.hpp"
#include "kelp/paths.hpp"
#include "kelp/selection.hpp"
#include "kelp/trainset.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace kelp {

inline constexpr const char* kToolVersion = "0.1.0";

/// Line-delimited JSON readers. Blank lines are skipped; a malformed line
/// throws InputError naming the file and line.
std::vector<QAItem> read_questions(const std::filesystem::path& path);
std::vector<Demonstration> read_few_shot(const std::filesystem::path& path);
std::vector<LabeledSample> read_trainset(const std::filesystem::path& path);

nlohmann::json triple_json(const KnowledgeGraph& g, const Triple& t);

/// {"id", "gamma", "selected_triplets", "paths"}; gamma is null when no
/// triplet was selected.
nlohmann::json selection_record(const KnowledgeGraph& g, const std::string& id, const SelectionResult& result);

/// {"id", "paths": [{"sentence", "triples"}]}
nlohmann::json path_record(const KnowledgeGraph& g, const std::string& id, const PathSet& ps);

nlohmann::json sample_record(const LabeledSample& sample);

/// FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// Writes one JSON value per line; throws InputError if the file cannot be written.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

/// Writes `<path>.meta.json` with tool, version, command, config and its hash.
void write_meta(const std::filesystem::path& path, const std::string& command, const nlohmann::json& config);

/// "# kelp <version> command=<cmd> config=<hash>"
std::string stamp_line(const std::string& command, const nlohmann::json& config);

}  // namespace kelp
