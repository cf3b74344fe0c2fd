#pragma once

#include "kelp/encoder.hpp"
#include "kelp/kg_store.hpp"
#include "kelp/llm.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kelp {

enum class TaskKind { Qa, Claim };

struct QAItem {
    std::string id;
    std::string question;
    std::vector<std::string> entity_surfaces;
    std::string gold_answer;
    TaskKind task_kind = TaskKind::Qa;
};

enum class Label { Negative = 0, Positive = 1 };

struct LabeledSample {
    std::string question;
    std::string path_sentence;
    Label label = Label::Negative;

    bool operator==(const LabeledSample&) const = default;
};

/// Lowercase, trim, collapse whitespace, strip trailing punctuation.
std::string normalize_answer(std::string_view text);

/// True iff the normalized gold is a non-empty substring of the normalized
/// prediction.
bool answers_match(std::string_view predicted, std::string_view gold);

/// Claims compare parsed verdicts; questions use answers_match.
bool is_correct(std::string_view predicted, const QAItem& item);

/// Queries `llm` with the path sentence as the only context. Returns nothing
/// (and appends a warning) if the provider fails.
std::optional<Label> probe_path(LLMProvider& llm, const QAItem& item, const std::string& path_sentence,
                                std::vector<std::string>* warnings = nullptr);

struct TrainsetReport {
    std::size_t screened = 0;
    std::size_t failed_no_context = 0;
    std::size_t probes = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t skipped = 0;  // provider failures
    std::vector<std::string> warnings;
};

struct TrainsetResult {
    std::vector<LabeledSample> samples;
    TrainsetReport report;
};

struct TrainsetOptions {
    double sample_fraction = 0.2;
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// Indices of the ceil(fraction * n) items kept by a seeded shuffle, ascending.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

/// Screens a seeded subsample with a context-free query, then probes every
/// candidate path of each failed item one at a time. Samples come out in
/// item order, then canonical path order.
TrainsetResult build_training_set(LLMProvider& llm, const KnowledgeGraph& g, const std::vector<QAItem>& items,
                                  const TrainsetOptions& options);

/// Positive x negative pairs within each question, at most `max_per_question`
/// per question (seeded sample, original order kept).
std::vector<TrainingPair> make_training_pairs(const std::vector<LabeledSample>& samples,
                                              std::size_t max_per_question, std::uint64_t seed);

}  // namespace kelp
