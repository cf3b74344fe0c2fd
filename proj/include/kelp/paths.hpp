#pragma once

#include "kelp/kg_store.hpp"

#include <string>
#include <vector>

namespace kelp {

/// One or two connected triples starting at `start()`.
struct KnowledgePath {
    std::vector<Triple> triples;

    EntityId start() const { return triples.front().head; }
    std::size_t hops() const { return triples.size(); }
    bool contains(const Triple& t) const;

    auto operator<=>(const KnowledgePath&) const = default;
    bool operator==(const KnowledgePath&) const = default;
};

/// Deduplicated paths in canonical order: path sentence ascending, then
/// triple id tuples ascending.
struct PathSet {
    std::vector<KnowledgePath> paths;

    std::size_t size() const { return paths.size(); }
    bool empty() const { return paths.empty(); }
};

/// Sorts and deduplicates `paths` into canonical order.
PathSet make_path_set(const KnowledgeGraph& g, std::vector<KnowledgePath> paths);

/// All 1-hop paths e->r->o and all 2-hop paths e->r1->o1->r2->o2 whose two
/// triples differ. Throws std::out_of_range for an invalid id.
PathSet extract_paths(const KnowledgeGraph& g, EntityId e);

/// Union of extract_paths over the resolvable surfaces. Unknown surfaces are
/// skipped and reported through `warnings` when given.
PathSet aggregate_question_paths(const KnowledgeGraph& g, const std::vector<std::string>& entity_surfaces,
                                 std::vector<std::string>* warnings = nullptr);

/// Surface with underscores rendered as spaces.
std::string render_surface(std::string_view surface);

/// "h r t." or "h1 r1 t1, h2 r2 t2."
std::string path_sentence(const KnowledgeGraph& g, const KnowledgePath& p);

/// "r." or "r1, r2."
std::string relation_sentence(const KnowledgeGraph& g, const KnowledgePath& p);

}  // namespace kelp
