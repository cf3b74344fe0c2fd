#include "kelp/selection.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace kelp {

bool ranks_before(const ScoredPath& a, const ScoredPath& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.sentence != b.sentence) return a.sentence < b.sentence;
    return a.path < b.path;
}

double TripletGroup::max_score() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : members) best = std::max(best, m.score);
    return best;
}

std::vector<ScoredPath> score_paths(const KnowledgeGraph& g, const EmbeddingProvider& provider,
                                    const std::string& question, const PathSet& ps) {
    std::vector<ScoredPath> out;
    if (ps.empty()) return out;

    std::vector<std::string> texts;
    texts.reserve(ps.size() + 1);
    texts.push_back(question);
    for (const auto& p : ps.paths) texts.push_back(path_sentence(g, p));
    auto vectors = provider.embed_batch(texts);

    out.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        out.push_back({ps.paths[i], std::move(texts[i + 1]), cosine(vectors[0], vectors[i + 1])});
    }
    return out;
}

std::vector<TripletGroup> group_by_triplet(const KnowledgeGraph& g, const std::vector<ScoredPath>& scored) {
    std::map<Triple, std::vector<ScoredPath>> by_triplet;
    for (const auto& sp : scored) {
        for (std::size_t i = 0; i < sp.path.triples.size(); ++i) {
            const auto& t = sp.path.triples[i];
            // A path holding the same triplet twice still joins its group once.
            if (i > 0 && sp.path.triples[0] == t) continue;
            by_triplet[t].push_back(sp);
        }
    }
    std::vector<TripletGroup> groups;
    groups.reserve(by_triplet.size());
    for (auto& [triplet, members] : by_triplet) {
        std::sort(members.begin(), members.end(), ranks_before);
        groups.push_back({triplet, std::move(members)});
    }
    std::sort(groups.begin(), groups.end(),
              [&](const TripletGroup& a, const TripletGroup& b) { return g.surface_less(a.triplet, b.triplet); });
    return groups;
}

std::vector<TripletGroup> top_k1_per_group(std::vector<TripletGroup> groups, int k1) {
    if (k1 < 1) throw std::invalid_argument("k1 must be >= 1");
    for (auto& group : groups) {
        std::sort(group.members.begin(), group.members.end(), ranks_before);
        if (group.members.size() > static_cast<std::size_t>(k1)) group.members.resize(static_cast<std::size_t>(k1));
    }
    return groups;
}

std::vector<Triple> select_top_groups(const KnowledgeGraph& g, const std::vector<TripletGroup>& groups, int k2) {
    if (k2 < 1) throw std::invalid_argument("k2 must be >= 1");
    std::vector<const TripletGroup*> order;
    for (const auto& group : groups) {
        if (!group.members.empty()) order.push_back(&group);
    }
    std::sort(order.begin(), order.end(), [&](const TripletGroup* a, const TripletGroup* b) {
        double ma = a->max_score(), mb = b->max_score();
        if (ma != mb) return ma > mb;
        return g.surface_less(a->triplet, b->triplet);
    });
    if (order.size() > static_cast<std::size_t>(k2)) order.resize(static_cast<std::size_t>(k2));

    std::vector<Triple> selected;
    selected.reserve(order.size());
    for (const auto* group : order) selected.push_back(group->triplet);
    return selected;
}

namespace {

const TripletGroup& find_group(const std::vector<TripletGroup>& groups, const Triple& t) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const TripletGroup& gr) { return gr.triplet == t; });
    if (it == groups.end()) throw std::invalid_argument("selected triplet has no group");
    return *it;
}

}  // namespace

std::vector<ScoredPath> aggregate_selected(const std::vector<Triple>& selected,
                                           const std::vector<TripletGroup>& groups) {
    std::vector<ScoredPath> out;
    std::set<KnowledgePath> seen;
    for (const auto& t : selected) {
        for (const auto& member : find_group(groups, t).members) {
            if (seen.insert(member.path).second) out.push_back(member);
        }
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

double compute_threshold(const std::vector<Triple>& selected, const std::vector<TripletGroup>& groups) {
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& t : selected) gamma = std::min(gamma, find_group(groups, t).max_score());
    return gamma;
}

std::vector<ScoredPath> finalize(std::vector<ScoredPath> aggregate, double gamma) {
    std::erase_if(aggregate, [&](const ScoredPath& sp) { return !(sp.score >= gamma); });
    std::sort(aggregate.begin(), aggregate.end(), ranks_before);
    return aggregate;
}

SelectionResult select_scored(const KnowledgeGraph& g, const std::vector<ScoredPath>& scored,
                              const SelectionConfig& config) {
    if (config.k1 < 1 || config.k2 < 1) throw std::invalid_argument("k1 and k2 must be >= 1");
    SelectionResult result;
    result.truncated_groups = top_k1_per_group(group_by_triplet(g, scored), config.k1);
    result.selected_triplets = select_top_groups(g, result.truncated_groups, config.k2);
    result.aggregate = aggregate_selected(result.selected_triplets, result.truncated_groups);
    result.gamma = compute_threshold(result.selected_triplets, result.truncated_groups);
    result.paths = finalize(result.aggregate, result.gamma);
    return result;
}

SelectionResult select_paths(const KnowledgeGraph& g, const std::string& question, const PathSet& ps,
                             const EmbeddingProvider& provider, const SelectionConfig& config) {
    return select_scored(g, score_paths(g, provider, question, ps), config);
}

std::vector<RelationScore> rank_relation_signatures(const KnowledgeGraph& g, const std::string& question,
                                                    const PathSet& ps, const EmbeddingProvider& relation_provider) {
    std::set<std::string> distinct;
    for (const auto& p : ps.paths) distinct.insert(relation_sentence(g, p));
    std::vector<RelationScore> out;
    if (distinct.empty()) return out;

    std::vector<std::string> texts;
    texts.reserve(distinct.size() + 1);
    texts.push_back(question);
    texts.insert(texts.end(), distinct.begin(), distinct.end());
    auto vectors = relation_provider.embed_batch(texts);
    for (std::size_t i = 1; i < texts.size(); ++i) {
        out.push_back({std::move(texts[i]), cosine(vectors[0], vectors[i])});
    }
    std::sort(out.begin(), out.end(), [](const RelationScore& a, const RelationScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.sentence < b.sentence;
    });
    return out;
}

SelectionResult relation_only_select(const KnowledgeGraph& g, const std::string& question, const PathSet& ps,
                                     const EmbeddingProvider& path_provider,
                                     const EmbeddingProvider& relation_provider, const SelectionConfig& config,
                                     int k_rel) {
    if (k_rel < 1) throw std::invalid_argument("k_rel must be >= 1");
    auto ranked = rank_relation_signatures(g, question, ps, relation_provider);
    if (ranked.size() > static_cast<std::size_t>(k_rel)) ranked.resize(static_cast<std::size_t>(k_rel));
    std::set<std::string> kept;
    for (auto& r : ranked) kept.insert(std::move(r.sentence));

    PathSet restricted;
    for (const auto& p : ps.paths) {
        if (kept.contains(relation_sentence(g, p))) restricted.paths.push_back(p);
    }
    return select_paths(g, question, restricted, path_provider, config);
}

}  // namespace kelp
