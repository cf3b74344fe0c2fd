#include "kelp/paths.hpp"

#include <algorithm>

namespace kelp {

bool KnowledgePath::contains(const Triple& t) const {
    return std::find(triples.begin(), triples.end(), t) != triples.end();
}

std::string render_surface(std::string_view surface) {
    std::string out(surface);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

std::string path_sentence(const KnowledgeGraph& g, const KnowledgePath& p) {
    std::string out;
    for (std::size_t i = 0; i < p.triples.size(); ++i) {
        const auto& t = p.triples[i];
        if (i > 0) out += ", ";
        out += render_surface(g.entity(t.head));
        out += ' ';
        out += render_surface(g.relation(t.relation));
        out += ' ';
        out += render_surface(g.entity(t.tail));
    }
    out += '.';
    return out;
}

std::string relation_sentence(const KnowledgeGraph& g, const KnowledgePath& p) {
    std::string out;
    for (std::size_t i = 0; i < p.triples.size(); ++i) {
        if (i > 0) out += ", ";
        out += render_surface(g.relation(p.triples[i].relation));
    }
    out += '.';
    return out;
}

PathSet make_path_set(const KnowledgeGraph& g, std::vector<KnowledgePath> paths) {
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

    std::vector<std::pair<std::string, KnowledgePath>> keyed;
    keyed.reserve(paths.size());
    for (auto& p : paths) {
        auto sentence = path_sentence(g, p);
        keyed.emplace_back(std::move(sentence), std::move(p));
    }
    std::sort(keyed.begin(), keyed.end());

    PathSet out;
    out.paths.reserve(keyed.size());
    for (auto& [sentence, p] : keyed) out.paths.push_back(std::move(p));
    return out;
}

PathSet extract_paths(const KnowledgeGraph& g, EntityId e) {
    std::vector<KnowledgePath> paths;
    for (const auto& first_edge : g.neighbors_out(e)) {
        Triple first{e, first_edge.relation, first_edge.tail};
        paths.push_back({{first}});
        for (const auto& second_edge : g.neighbors_out(first_edge.tail)) {
            Triple second{first_edge.tail, second_edge.relation, second_edge.tail};
            if (second == first) continue;  // only reachable through a self-loop
            paths.push_back({{first, second}});
        }
    }
    return make_path_set(g, std::move(paths));
}

PathSet aggregate_question_paths(const KnowledgeGraph& g, const std::vector<std::string>& entity_surfaces,
                                 std::vector<std::string>* warnings) {
    std::vector<KnowledgePath> all;
    for (const auto& surface : entity_surfaces) {
        auto id = g.lookup_entity(surface);
        if (!id) {
            if (warnings) warnings->push_back("entity not found in graph: \"" + surface + "\"");
            continue;
        }
        auto ps = extract_paths(g, *id);
        all.insert(all.end(), std::make_move_iterator(ps.paths.begin()), std::make_move_iterator(ps.paths.end()));
    }
    return make_path_set(g, std::move(all));
}

}  // namespace kelp
