#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kelp {

struct EntityId {
    std::uint32_t value = 0;
    auto operator<=>(const EntityId&) const = default;
};

struct RelationId {
    std::uint32_t value = 0;
    auto operator<=>(const RelationId&) const = default;
};

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;
    auto operator<=>(const Triple&) const = default;
};

struct Edge {
    RelationId relation;
    EntityId tail;
    auto operator<=>(const Edge&) const = default;
};

struct TripleText {
    std::string head;
    std::string relation;
    std::string tail;
};

/// Surface <-> dense id bijection. Ids are assigned in first-seen order.
class InternTable {
public:
    std::uint32_t intern(std::string_view surface);
    std::optional<std::uint32_t> find(std::string_view surface) const;
    const std::string& surface(std::uint32_t id) const { return surfaces_.at(id); }
    std::size_t size() const { return surfaces_.size(); }
    const std::vector<std::string>& surfaces() const { return surfaces_; }

private:
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Immutable directed knowledge graph with an outgoing adjacency index.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    /// Builds a graph from surface triples. Duplicates collapse; rows with an
    /// empty field are rejected with std::invalid_argument.
    static KnowledgeGraph from_triples(std::span<const TripleText> rows);

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t relation_count() const { return relations_.size(); }
    std::size_t triple_count() const { return triples_.size(); }

    /// Triples in insertion (first-seen) order.
    const std::vector<Triple>& triples() const { return triples_; }

    const std::string& entity(EntityId id) const;
    const std::string& relation(RelationId id) const;
    TripleText text(const Triple& t) const;

    std::optional<EntityId> lookup_entity(std::string_view surface) const;
    std::optional<RelationId> lookup_relation(std::string_view surface) const;

    /// Outgoing edges of `e`, sorted by (relation surface, tail surface).
    /// Throws std::out_of_range for an id not in this graph.
    std::span<const Edge> neighbors_out(EntityId e) const;

    bool contains(const Triple& t) const;

    /// Orders triples by their surfaces (head, relation, tail).
    bool surface_less(const Triple& a, const Triple& b) const;

private:
    friend class GraphBuilder;

    InternTable entities_;
    InternTable relations_;
    std::vector<Triple> triples_;
    std::vector<std::vector<Edge>> adjacency_;
};

class GraphBuilder {
public:
    /// Returns false if the triple was already present.
    bool add(std::string_view head, std::string_view relation, std::string_view tail);
    KnowledgeGraph build() &&;

private:
    KnowledgeGraph graph_;
    std::vector<std::vector<Edge>> edges_;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t duplicates = 0;
    std::vector<std::string> warnings;
};

/// Reads `head<TAB>relation<TAB>tail` rows. Blank lines and lines starting
/// with '#' are skipped; malformed rows produce a warning with the line number.
KnowledgeGraph load_graph(std::istream& in, LoadReport* report = nullptr);

/// Throws InputError if the file cannot be opened.
KnowledgeGraph load_graph(const std::filesystem::path& path, LoadReport* report = nullptr);

}  // namespace kelp
