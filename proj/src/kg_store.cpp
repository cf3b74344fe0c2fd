#include "kelp/kg_store.hpp"

#include "kelp/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace kelp {

std::uint32_t InternTable::intern(std::string_view surface) {
    auto it = ids_.find(std::string(surface));
    if (it != ids_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(surfaces_.size());
    surfaces_.emplace_back(surface);
    ids_.emplace(surfaces_.back(), id);
    return id;
}

std::optional<std::uint32_t> InternTable::find(std::string_view surface) const {
    auto it = ids_.find(std::string(surface));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& KnowledgeGraph::entity(EntityId id) const {
    if (id.value >= entities_.size()) throw std::out_of_range("entity id out of range");
    return entities_.surface(id.value);
}

const std::string& KnowledgeGraph::relation(RelationId id) const {
    if (id.value >= relations_.size()) throw std::out_of_range("relation id out of range");
    return relations_.surface(id.value);
}

TripleText KnowledgeGraph::text(const Triple& t) const {
    return {entity(t.head), relation(t.relation), entity(t.tail)};
}

std::optional<EntityId> KnowledgeGraph::lookup_entity(std::string_view surface) const {
    if (surface.empty()) return std::nullopt;
    if (auto id = entities_.find(surface)) return EntityId{*id};
    return std::nullopt;
}

std::optional<RelationId> KnowledgeGraph::lookup_relation(std::string_view surface) const {
    if (surface.empty()) return std::nullopt;
    if (auto id = relations_.find(surface)) return RelationId{*id};
    return std::nullopt;
}

std::span<const Edge> KnowledgeGraph::neighbors_out(EntityId e) const {
    if (e.value >= adjacency_.size()) {
        throw std::out_of_range("neighbors_out: entity id " + std::to_string(e.value) +
                                " not in graph");
    }
    return adjacency_[e.value];
}

bool KnowledgeGraph::contains(const Triple& t) const {
    if (t.head.value >= adjacency_.size()) return false;
    const auto& edges = adjacency_[t.head.value];
    return std::find(edges.begin(), edges.end(), Edge{t.relation, t.tail}) != edges.end();
}

bool KnowledgeGraph::surface_less(const Triple& a, const Triple& b) const {
    const auto& ah = entity(a.head);
    const auto& bh = entity(b.head);
    if (ah != bh) return ah < bh;
    const auto& ar = relation(a.relation);
    const auto& br = relation(b.relation);
    if (ar != br) return ar < br;
    return entity(a.tail) < entity(b.tail);
}

KnowledgeGraph KnowledgeGraph::from_triples(std::span<const TripleText> rows) {
    GraphBuilder builder;
    for (const auto& row : rows) builder.add(row.head, row.relation, row.tail);
    return std::move(builder).build();
}

bool GraphBuilder::add(std::string_view head, std::string_view relation, std::string_view tail) {
    if (head.empty() || relation.empty() || tail.empty()) {
        throw std::invalid_argument("triple fields must be non-empty");
    }
    auto& g = graph_;
    Triple t{EntityId{g.entities_.intern(head)}, RelationId{g.relations_.intern(relation)},
             EntityId{g.entities_.intern(tail)}};
    if (edges_.size() < g.entities_.size()) edges_.resize(g.entities_.size());
    auto& out = edges_[t.head.value];
    Edge edge{t.relation, t.tail};
    // Duplicate check is linear in the head's out-degree; KG dumps are sparse.
    if (std::find(out.begin(), out.end(), edge) != out.end()) return false;
    out.push_back(edge);
    g.triples_.push_back(t);
    return true;
}

KnowledgeGraph GraphBuilder::build() && {
    auto& g = graph_;
    edges_.resize(g.entities_.size());
    for (auto& out : edges_) {
        std::sort(out.begin(), out.end(), [&](const Edge& a, const Edge& b) {
            const auto& ar = g.relations_.surface(a.relation.value);
            const auto& br = g.relations_.surface(b.relation.value);
            if (ar != br) return ar < br;
            return g.entities_.surface(a.tail.value) < g.entities_.surface(b.tail.value);
        });
    }
    g.adjacency_ = std::move(edges_);
    return std::move(g);
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

}  // namespace

KnowledgeGraph load_graph(std::istream& in, LoadReport* report) {
    LoadReport local;
    auto& rep = report ? *report : local;
    GraphBuilder builder;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            rep.warnings.push_back("line " + std::to_string(lineno) + ": expected 3 tab-separated fields, got " +
                                   std::to_string(fields.size()));
            continue;
        }
        if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            rep.warnings.push_back("line " + std::to_string(lineno) + ": empty field");
            continue;
        }
        ++rep.rows_read;
        if (!builder.add(fields[0], fields[1], fields[2])) ++rep.duplicates;
    }
    return std::move(builder).build();
}

KnowledgeGraph load_graph(const std::filesystem::path& path, LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open triple file: " + path.string());
    return load_graph(in, report);
}

}  // namespace kelp
