#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code paths it checks: walks are read
// straight off the triple list, and selection is solved by exhaustive subset
// enumeration.

#include "kelp/kg_store.hpp"
#include "kelp/paths.hpp"
#include "kelp/selection.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace kelp::oracle {

using Walk = std::vector<Triple>;

/// Every length-1 and length-2 walk from `start`, excluding walks that use the
/// same triple twice.
inline std::set<Walk> enumerate_walks(const KnowledgeGraph& g, EntityId start) {
    std::set<Walk> walks;
    const auto& triples = g.triples();
    for (const auto& first : triples) {
        if (first.head != start) continue;
        walks.insert({first});
        for (const auto& second : triples) {
            if (second.head == first.tail && !(second == first)) walks.insert({first, second});
        }
    }
    return walks;
}

inline std::set<Walk> as_walks(const PathSet& ps) {
    std::set<Walk> out;
    for (const auto& p : ps.paths) out.insert(p.triples);
    return out;
}

/// Random graph over entities "e0".."e{n-1}" and relations "r0".."r{m-1}".
/// Self-loops occur naturally and are additionally injected. A non-empty
/// `suffix` is appended to every surface ("e3x") so that no surface is a
/// substring of a rendered triple it does not belong to.
inline KnowledgeGraph random_graph(std::mt19937_64& rng, std::size_t max_entities, std::size_t max_triples,
                                   std::size_t max_relations = 6, const std::string& suffix = "") {
    std::uniform_int_distribution<std::size_t> n_ent(1, max_entities);
    std::uniform_int_distribution<std::size_t> n_rel(1, max_relations);
    std::uniform_int_distribution<std::size_t> n_tri(0, max_triples);
    auto entities = n_ent(rng);
    auto relations = n_rel(rng);
    auto count = n_tri(rng);
    std::uniform_int_distribution<std::size_t> pick_e(0, entities - 1);
    std::uniform_int_distribution<std::size_t> pick_r(0, relations - 1);
    std::bernoulli_distribution self_loop(0.1);
    std::vector<TripleText> rows;
    for (std::size_t i = 0; i < count; ++i) {
        auto h = pick_e(rng);
        auto t = self_loop(rng) ? h : pick_e(rng);
        rows.push_back({"e" + std::to_string(h) + suffix, "r" + std::to_string(pick_r(rng)) + suffix,
                        "e" + std::to_string(t) + suffix});
    }
    return KnowledgeGraph::from_triples(rows);
}

struct SelectionAnswer {
    std::set<Triple> selected;
    double gamma = std::numeric_limits<double>::infinity();
    std::set<Walk> paths;
};

namespace detail {

// Sum in ascending value order so equal multisets give bit-identical sums.
inline double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

inline std::tuple<std::string, std::string, std::string> surface_key(const KnowledgeGraph& g, const Triple& t) {
    return {g.entity(t.head), g.relation(t.relation), g.entity(t.tail)};
}

// Best subset of exactly `size` items out of `n` by summed `value`, ties broken
// by the lexicographically smallest sorted key vector. Enumerates all
// combinations in lexicographic index order.
template <typename Value, typename Key>
std::vector<std::size_t> best_subset(std::size_t n, std::size_t size, Value value, Key key) {
    using K = decltype(key(std::size_t{0}));
    std::vector<std::size_t> best;
    std::vector<K> best_keys;
    double best_sum = -std::numeric_limits<double>::infinity();
    bool found = false;

    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    if (size > n) return best;
    while (true) {
        std::vector<double> values;
        std::vector<K> keys;
        for (auto i : idx) {
            values.push_back(value(i));
            keys.push_back(key(i));
        }
        std::sort(keys.begin(), keys.end());
        double sum = stable_sum(values);
        if (!found || sum > best_sum || (sum == best_sum && keys < best_keys)) {
            found = true;
            best = idx;
            best_sum = sum;
            best_keys = std::move(keys);
        }
        // advance to the next combination
        std::size_t pos = size;
        while (pos > 0 && idx[pos - 1] == n - size + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
    return best;
}

}  // namespace detail

/// Exhaustive solution of the per-group cut (best k1-subset by score sum),
/// the group cut (best min(k2, #groups)-subset by sum of group maxima), the
/// union, the min-of-max threshold and the final filter.
inline SelectionAnswer exhaustive_select(const KnowledgeGraph& g, const std::vector<ScoredPath>& scored, int k1,
                                         int k2) {
    std::set<Triple> triplets;
    for (const auto& sp : scored) triplets.insert(sp.path.triples.begin(), sp.path.triples.end());

    struct Group {
        Triple triplet;
        std::vector<const ScoredPath*> kept;
        double max = -std::numeric_limits<double>::infinity();
    };
    std::vector<Group> groups;
    for (const auto& t : triplets) {
        std::vector<const ScoredPath*> members;
        for (const auto& sp : scored) {
            if (std::find(sp.path.triples.begin(), sp.path.triples.end(), t) != sp.path.triples.end()) {
                members.push_back(&sp);
            }
        }
        auto size = std::min<std::size_t>(static_cast<std::size_t>(k1), members.size());
        auto pick = detail::best_subset(
            members.size(), size, [&](std::size_t i) { return members[i]->score; },
            [&](std::size_t i) { return std::make_pair(members[i]->sentence, members[i]->path.triples); });
        Group group{t, {}, -std::numeric_limits<double>::infinity()};
        for (auto i : pick) {
            group.kept.push_back(members[i]);
            group.max = std::max(group.max, members[i]->score);
        }
        groups.push_back(std::move(group));
    }

    SelectionAnswer answer;
    auto size = std::min<std::size_t>(static_cast<std::size_t>(k2), groups.size());
    auto chosen = detail::best_subset(
        groups.size(), size, [&](std::size_t i) { return groups[i].max; },
        [&](std::size_t i) { return detail::surface_key(g, groups[i].triplet); });
    for (auto i : chosen) {
        answer.selected.insert(groups[i].triplet);
        answer.gamma = std::min(answer.gamma, groups[i].max);
    }
    for (auto i : chosen) {
        for (const auto* sp : groups[i].kept) {
            if (sp->score >= answer.gamma) answer.paths.insert(sp->path.triples);
        }
    }
    return answer;
}

/// Scored paths drawn from a random small graph: at most `max_paths` paths,
/// scores uniform in [-1, 1], optionally rounded to multiples of 1/8 so that
/// ties are common.
inline std::vector<ScoredPath> random_scored_paths(std::mt19937_64& rng, const KnowledgeGraph& g,
                                                   std::size_t max_paths, bool quantize) {
    std::vector<KnowledgePath> all;
    for (std::uint32_t e = 0; e < g.entity_count(); ++e) {
        auto ps = extract_paths(g, EntityId{e});
        all.insert(all.end(), ps.paths.begin(), ps.paths.end());
    }
    std::shuffle(all.begin(), all.end(), rng);
    std::uniform_int_distribution<std::size_t> n_paths(0, std::min(max_paths, all.size()));
    all.resize(n_paths(rng));
    auto ps = make_path_set(g, std::move(all));

    std::uniform_real_distribution<double> score(-1.0, 1.0);
    std::uniform_int_distribution<int> eighths(-8, 8);
    std::vector<ScoredPath> out;
    for (const auto& p : ps.paths) {
        double s = quantize ? eighths(rng) / 8.0 : score(rng);
        out.push_back({p, path_sentence(g, p), s});
    }
    return out;
}

}  // namespace kelp::oracle
