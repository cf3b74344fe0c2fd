#include "kelp/pipeline.hpp"

#include "kelp/encoder.hpp"
#include "kelp/paths.hpp"

#include <stdexcept>

namespace kelp {

namespace {

bool is_url(const std::string& spec) { return spec.starts_with("http://") || spec.starts_with("https://"); }

std::string after_prefix(const std::string& spec, std::string_view prefix) {
    return spec.substr(prefix.size());
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
    if (spec == "builtin-hash") return std::make_unique<HashedBagProvider>(1024);
    if (spec.starts_with("builtin-hash:")) {
        return std::make_unique<HashedBagProvider>(std::stoul(after_prefix(spec, "builtin-hash:")));
    }
    if (spec.starts_with("encoder:")) {
        return std::make_unique<LinearEncoder>(load_encoder(std::filesystem::path(after_prefix(spec, "encoder:"))));
    }
    if (spec.starts_with("random:")) {
        auto rest = after_prefix(spec, "random:");
        auto colon = rest.find(':');
        std::uint64_t seed = std::stoull(rest.substr(0, colon));
        std::size_t dim = colon == std::string::npos ? 64 : std::stoul(rest.substr(colon + 1));
        return std::make_unique<RandomProvider>(seed, dim);
    }
    if (is_url(spec)) return std::make_unique<RemoteEmbeddingProvider>(spec);
    throw std::invalid_argument("unknown provider spec \"" + spec + "\"");
}

std::unique_ptr<LLMProvider> make_llm(const std::string& spec) {
    if (spec.starts_with("mock:")) {
        return std::make_unique<MockLLM>(load_mock_spec(std::filesystem::path(after_prefix(spec, "mock:"))));
    }
    if (is_url(spec)) return std::make_unique<RemoteLLM>(spec);
    throw std::invalid_argument("unknown LLM spec \"" + spec + "\"");
}

Prediction answer_question(LLMProvider& llm, const KnowledgeGraph& g, const QAItem& item,
                           const EmbeddingProvider& provider, const EmbeddingProvider* relation_provider,
                           const AnswerOptions& options) {
    Prediction out;
    out.id = item.id;

    PromptBundle bundle;
    bundle.system_preamble = options.preamble;
    bundle.few_shot = options.few_shot;
    bundle.question = item.question;

    if (options.use_context) {
        auto ps = aggregate_question_paths(g, item.entity_surfaces, &out.warnings);
        SelectionResult selection;
        if (options.relation_only) {
            if (!relation_provider) throw std::invalid_argument("relation-only selection needs a relation provider");
            selection = relation_only_select(g, item.question, ps, provider, *relation_provider, options.selection,
                                             options.k_rel);
        } else {
            selection = select_paths(g, item.question, ps, provider, options.selection);
        }
        for (const auto& sp : selection.paths) bundle.context_block.push_back(sp.sentence);
    }
    out.context = bundle.context_block;

    if (item.task_kind == TaskKind::Claim && options.claim_recheck) {
        auto outcome = verify_claim(llm, bundle);
        out.answer = outcome.verdict == Verdict::True ? "True" : "False";
        out.calls = outcome.calls;
        for (auto& w : outcome.warnings) out.warnings.push_back(item.id + ": " + w);
    } else {
        out.answer = answer_with_context(llm, bundle);
        out.calls = 1;
    }
    return out;
}

EvalReport evaluate(const std::vector<QAItem>& items, const std::map<std::string, std::string>& predictions) {
    EvalReport report;
    for (const auto& item : items) {
        ++report.total;
        auto it = predictions.find(item.id);
        if (it == predictions.end()) {
            ++report.missing;
            continue;
        }
        if (is_correct(it->second, item)) ++report.correct;
    }
    return report;
}

}  // namespace kelp
