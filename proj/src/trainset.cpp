#include "kelp/trainset.hpp"

#include "kelp/errors.hpp"
#include "kelp/parallel.hpp"
#include "kelp/paths.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace kelp {

std::string normalize_answer(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    while (!out.empty() && std::ispunct(static_cast<unsigned char>(out.back()))) out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

bool answers_match(std::string_view predicted, std::string_view gold) {
    auto g = normalize_answer(gold);
    if (g.empty()) return false;
    return normalize_answer(predicted).find(g) != std::string::npos;
}

bool is_correct(std::string_view predicted, const QAItem& item) {
    if (item.task_kind == TaskKind::Claim) {
        auto expected = parse_verdict(item.gold_answer);
        auto got = parse_verdict(predicted);
        return expected && got && *expected == *got;
    }
    return answers_match(predicted, item.gold_answer);
}

std::optional<Label> probe_path(LLMProvider& llm, const QAItem& item, const std::string& path_sentence,
                                std::vector<std::string>* warnings) {
    PromptBundle bundle;
    bundle.context_block = {path_sentence};
    bundle.question = item.question;
    try {
        auto answer = answer_with_context(llm, bundle);
        return is_correct(answer, item) ? Label::Positive : Label::Negative;
    } catch (const ProviderError& e) {
        if (warnings) warnings->push_back("item " + item.id + ": probe skipped: " + e.what());
        return std::nullopt;
    }
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("sample fraction must be in (0, 1]");
    auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    keep = std::min(keep, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(seed);
    std::shuffle(order.begin(), order.end(), gen);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

TrainsetResult build_training_set(LLMProvider& llm, const KnowledgeGraph& g, const std::vector<QAItem>& items,
                                  const TrainsetOptions& options) {
    if (items.empty()) throw std::invalid_argument("build_training_set: no items");
    TrainsetResult result;
    auto& report = result.report;

    for (auto index : subsample_indices(items.size(), options.sample_fraction, options.seed)) {
        const auto& item = items[index];
        ++report.screened;

        PromptBundle bare;
        bare.question = item.question;
        std::string answer;
        try {
            answer = answer_with_context(llm, bare);
        } catch (const ProviderError& e) {
            report.warnings.push_back("item " + item.id + ": screening skipped: " + e.what());
            ++report.skipped;
            continue;
        }
        if (is_correct(answer, item)) continue;
        ++report.failed_no_context;

        auto ps = aggregate_question_paths(g, item.entity_surfaces, &report.warnings);
        std::vector<std::string> sentences;
        sentences.reserve(ps.size());
        for (const auto& p : ps.paths) sentences.push_back(path_sentence(g, p));

        std::vector<std::optional<Label>> labels(sentences.size());
        std::vector<std::vector<std::string>> probe_warnings(sentences.size());
        parallel_for(sentences.size(), options.jobs,
                     [&](std::size_t i) { labels[i] = probe_path(llm, item, sentences[i], &probe_warnings[i]); });

        for (std::size_t i = 0; i < sentences.size(); ++i) {
            for (auto& w : probe_warnings[i]) report.warnings.push_back(std::move(w));
            if (!labels[i]) {
                ++report.skipped;
                continue;
            }
            ++report.probes;
            if (*labels[i] == Label::Positive) ++report.positives;
            else ++report.negatives;
            result.samples.push_back({item.question, sentences[i], *labels[i]});
        }
    }
    return result;
}

std::vector<TrainingPair> make_training_pairs(const std::vector<LabeledSample>& samples,
                                              std::size_t max_per_question, std::uint64_t seed) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> by_question;
    for (const auto& s : samples) {
        auto [it, inserted] = by_question.try_emplace(s.question);
        if (inserted) order.push_back(s.question);
        auto& bucket = s.label == Label::Positive ? it->second.first : it->second.second;
        bucket.push_back(s.path_sentence);
    }

    std::mt19937_64 gen(seed);
    std::vector<TrainingPair> pairs;
    for (const auto& question : order) {
        const auto& [positives, negatives] = by_question[question];
        std::size_t total = positives.size() * negatives.size();
        if (total == 0) continue;
        std::vector<std::size_t> chosen(total);
        std::iota(chosen.begin(), chosen.end(), std::size_t{0});
        if (total > max_per_question) {
            std::shuffle(chosen.begin(), chosen.end(), gen);
            chosen.resize(max_per_question);
            std::sort(chosen.begin(), chosen.end());
        }
        for (auto c : chosen) {
            pairs.push_back({question, positives[c / negatives.size()], negatives[c % negatives.size()]});
        }
    }
    return pairs;
}

}  // namespace kelp
