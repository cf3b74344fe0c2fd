#pragma once

#include "kelp/embedding.hpp"
#include "kelp/kg_store.hpp"
#include "kelp/llm.hpp"
#include "kelp/selection.hpp"
#include "kelp/trainset.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace kelp {

/// "builtin-hash[:H]", "encoder:<weights file>", "random:<seed>[:dim]", or an
/// http(s) base URL. Throws std::invalid_argument for an unknown spec.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

/// "mock:<rules.json>" or an http(s) base URL.
std::unique_ptr<LLMProvider> make_llm(const std::string& spec);

struct AnswerOptions {
    SelectionConfig selection;
    bool use_context = true;
    bool relation_only = false;
    int k_rel = 16;
    bool claim_recheck = false;
    std::string preamble;
    std::vector<Demonstration> few_shot;
};

struct Prediction {
    std::string id;
    std::string answer;
    std::vector<std::string> context;
    int calls = 0;
    std::vector<std::string> warnings;
};

/// Path extraction, selection (plain or relation-only), prompt assembly and
/// the LLM call; claims go through verify_claim when claim_recheck is set.
/// `relation_provider` is required only for relation-only selection.
Prediction answer_question(LLMProvider& llm, const KnowledgeGraph& g, const QAItem& item,
                           const EmbeddingProvider& provider, const EmbeddingProvider* relation_provider,
                           const AnswerOptions& options);

struct EvalReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t missing = 0;  // items without a prediction
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

/// Scores predictions (by item id) against gold answers with is_correct.
EvalReport evaluate(const std::vector<QAItem>& items, const std::map<std::string, std::string>& predictions);

}  // namespace kelp
