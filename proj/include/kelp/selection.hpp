#pragma once

#include "kelp/embedding.hpp"
#include "kelp/kg_store.hpp"
#include "kelp/paths.hpp"

#include <limits>
#include <string>
#include <vector>

namespace kelp {

struct ScoredPath {
    KnowledgePath path;
    std::string sentence;
    double score = 0.0;

    bool operator==(const ScoredPath&) const = default;
};

/// Ranking order used everywhere in selection: score descending, then
/// sentence ascending, then triple ids ascending.
bool ranks_before(const ScoredPath& a, const ScoredPath& b);

/// Paths containing one shared triplet. Members are in ranking order.
struct TripletGroup {
    Triple triplet;
    std::vector<ScoredPath> members;

    double max_score() const;
    bool operator==(const TripletGroup&) const = default;
};

struct SelectionConfig {
    int k1 = 4;  // paths kept per triplet group
    int k2 = 4;  // triplet groups kept
};

struct SelectionResult {
    std::vector<Triple> selected_triplets;  // in ranking order
    double gamma = std::numeric_limits<double>::infinity();
    std::vector<ScoredPath> paths;  // final context, ranking order

    // Audit trail: every group after the per-group cut, and the union of the
    // selected groups before the threshold filter.
    std::vector<TripletGroup> truncated_groups;
    std::vector<ScoredPath> aggregate;

    bool operator==(const SelectionResult&) const = default;
};

/// Embeds the question once and every path sentence in one batch.
std::vector<ScoredPath> score_paths(const KnowledgeGraph& g, const EmbeddingProvider& provider,
                                    const std::string& question, const PathSet& ps);

/// One group per distinct triplet, groups ordered by triplet surfaces.
std::vector<TripletGroup> group_by_triplet(const KnowledgeGraph& g, const std::vector<ScoredPath>& scored);

/// Keeps the k1 best members of each group (all of them when smaller).
std::vector<TripletGroup> top_k1_per_group(std::vector<TripletGroup> groups, int k1);

/// The min(k2, |groups|) groups with the highest group maximum; ties by
/// triplet surface ascending. Returned in that order.
std::vector<Triple> select_top_groups(const KnowledgeGraph& g, const std::vector<TripletGroup>& groups, int k2);

/// Union of the selected groups' members, deduplicated, in ranking order.
std::vector<ScoredPath> aggregate_selected(const std::vector<Triple>& selected,
                                           const std::vector<TripletGroup>& groups);

/// Minimum over selected groups of the group maximum; +inf when none selected.
double compute_threshold(const std::vector<Triple>& selected, const std::vector<TripletGroup>& groups);

/// Paths with score >= gamma, in ranking order.
std::vector<ScoredPath> finalize(std::vector<ScoredPath> aggregate, double gamma);

/// Group -> per-group cut -> group cut -> union -> threshold -> filter, on
/// already scored paths.
SelectionResult select_scored(const KnowledgeGraph& g, const std::vector<ScoredPath>& scored,
                              const SelectionConfig& config);

SelectionResult select_paths(const KnowledgeGraph& g, const std::string& question, const PathSet& ps,
                             const EmbeddingProvider& provider, const SelectionConfig& config);

struct RelationScore {
    std::string sentence;
    double score = 0.0;
};

/// Distinct relation sentences of `ps` scored with `relation_provider`, best
/// first (score descending, sentence ascending).
std::vector<RelationScore> rank_relation_signatures(const KnowledgeGraph& g, const std::string& question,
                                                    const PathSet& ps, const EmbeddingProvider& relation_provider);

/// Two-stage selection: keep the k_rel best relation signatures under the
/// relation encoder, then run select_paths with the path encoder on the
/// surviving paths.
SelectionResult relation_only_select(const KnowledgeGraph& g, const std::string& question, const PathSet& ps,
                                     const EmbeddingProvider& path_provider,
                                     const EmbeddingProvider& relation_provider, const SelectionConfig& config,
                                     int k_rel);

}  // namespace kelp
