#include "pihier/json_io.hpp"

#include <fstream>
#include <sstream>

#include "pihier/canonical.hpp"
#include "pihier/printer.hpp"

namespace pihier {

Json base_forest_to_json(const BaseForest& T) {
    Json j;
    j["nodes"] = Json::array();
    for (const auto& n : T.nodes()) j["nodes"].push_back(n);
    j["edges"] = Json::array();
    for (const auto& n : T.nodes()) {
        auto p = T.parent(n);
        if (p) j["edges"].push_back(Json::array({*p, n}));
    }
    return j;
}

BaseForest base_forest_from_json(const Json& j) {
    BaseForest T;
    for (const auto& n : j.at("nodes")) T.add_node(n.get<std::string>());
    if (j.contains("edges"))
        for (const auto& e : j.at("edges"))
            T.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    T.validate();
    return T;
}

BaseForest load_base_forest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open forest file '" + path + "'");
    Json j;
    in >> j;
    return base_forest_from_json(j);
}

namespace {

std::string label_text(const LabelledForest& f, NodeId id) {
    if (f.is_name(id)) {
        const auto& nl = f.name_label(id);
        return "(" + nl.name.ident + "," + nl.base + ")";
    }
    return print_term(seq_to_term(*f.seq_label(id)));
}

} // namespace

Json labelled_forest_to_json(const LabelledForest& f) {
    Json j;
    j["nodes"] = Json::array();
    for (NodeId id : f.all_nodes()) {
        Json n;
        n["id"] = id;
        if (f.node(id).parent != kNoNode) n["parent"] = f.node(id).parent;
        if (f.is_name(id)) {
            n["kind"] = "name";
            n["name"] = f.name_label(id).name.ident;
            n["base"] = f.name_label(id).base;
            if (f.name_label(id).type) n["type"] = f.name_label(id).type->to_string();
        } else {
            n["kind"] = "seq";
            n["term"] = print_term(seq_to_term(*f.seq_label(id)));
        }
        j["nodes"].push_back(std::move(n));
    }
    return j;
}

std::string labelled_forest_to_dot(const LabelledForest& f) {
    std::ostringstream os;
    os << "digraph forest {\n  rankdir=TB;\n";
    for (NodeId id : f.all_nodes()) {
        os << "  n" << id << " [label=\"";
        for (char ch : label_text(f, id)) {
            if (ch == '"' || ch == '\\') os << '\\';
            os << ch;
        }
        os << "\"" << (f.is_name(id) ? "" : ", shape=box") << "];\n";
        if (f.node(id).parent != kNoNode)
            os << "  n" << f.node(id).parent << " -> n" << id << ";\n";
    }
    os << "}\n";
    return os.str();
}

Json reach_graph_to_json(const ReachGraph& g) {
    Json j;
    j["initial"] = g.initial;
    j["truncated"] = g.truncated;
    j["states"] = Json::array();
    std::map<std::string, std::size_t> index;
    for (const auto& [key, nf] : g.states) {
        Json s;
        s["id"] = index.size();
        s["term"] = print_term(to_term(nf));
        index.emplace(key, index.size());
        j["states"].push_back(std::move(s));
    }
    j["initial_id"] = index.at(g.initial);
    j["edges"] = Json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back(
            Json{{"from", index.at(e.from)}, {"redex", e.redex}, {"to", index.at(e.to)}});
    return j;
}

std::string reach_graph_to_dot(const ReachGraph& g) {
    std::ostringstream os;
    os << "digraph reach {\n";
    std::map<std::string, std::size_t> index;
    for (const auto& [key, nf] : g.states) {
        std::size_t id = index.size();
        index.emplace(key, id);
        os << "  s" << id << " [label=\"";
        for (char ch : print_term(to_term(nf))) {
            if (ch == '"' || ch == '\\') os << '\\';
            os << ch;
        }
        os << "\"];\n";
    }
    for (const auto& e : g.edges)
        os << "  s" << index.at(e.from) << " -> s" << index.at(e.to) << " [label=\"" << e.redex
           << "\"];\n";
    os << "}\n";
    return os.str();
}

Json automaton_to_json(const Automaton& a) {
    Json j;
    j["level"] = a.level;
    j["states"] = Json::array();
    for (StateId s = 0; s < a.state_count(); ++s) j["states"].push_back(a.state_name(s));
    j["initial"] = a.state_name(a.initial_state);
    if (a.garbage_state) j["garbage"] = a.state_name(*a.garbage_state);
    j["transitions"] = Json::array();
    auto slot = [&](StateId s) -> Json {
        if (s == kFreshSlot) return nullptr;
        return a.state_name(s);
    };
    for (const auto& t : a.concrete) {
        Json jt;
        jt["kind"] = "concrete";
        jt["from"] = a.state_name(t.from);
        jt["to"] = a.state_name(t.to);
        jt["pre"] = Json::array();
        for (auto p : t.pre) jt["pre"].push_back(slot(p));
        jt["post"] = Json::array();
        for (auto p : t.post) jt["post"].push_back(a.state_name(p));
        j["transitions"].push_back(std::move(jt));
    }
    for (const auto& t : a.patterns) {
        Json jt;
        jt["kind"] = "pattern";
        jt["from"] = a.state_name(t.from);
        jt["to"] = a.state_name(t.to);
        jt["pre"] = Json::array();
        for (auto p : t.pre) jt["pre"].push_back(a.state_name(p));
        jt["post"] = Json::array();
        for (auto p : t.post) jt["post"].push_back(a.state_name(p));
        if (t.fresh) jt["fresh"] = a.state_name(*t.fresh);
        j["transitions"].push_back(std::move(jt));
    }
    j["memory"] = Json::array();
    for (std::size_t i = 0; i < a.initial_memory.size(); ++i) {
        Json e;
        e["value"] = i;
        if (a.initial_memory[i].parent) e["parent"] = *a.initial_memory[i].parent;
        e["label"] = a.initial_memory[i].label;
        j["memory"].push_back(std::move(e));
    }
    return j;
}

Automaton automaton_from_json(const Json& j) {
    Automaton a;
    a.level = j.at("level").get<std::size_t>();
    for (const auto& s : j.at("states")) a.intern(s.get<std::string>());
    a.initial_state = a.intern(j.at("initial").get<std::string>());
    if (j.contains("garbage")) a.garbage_state = a.intern(j.at("garbage").get<std::string>());
    for (const auto& jt : j.at("transitions")) {
        std::string kind = jt.value("kind", "concrete");
        if (kind == "concrete") {
            ConcreteTransition t;
            t.from = a.intern(jt.at("from").get<std::string>());
            t.to = a.intern(jt.at("to").get<std::string>());
            for (const auto& p : jt.at("pre"))
                t.pre.push_back(p.is_null() ? kFreshSlot : a.intern(p.get<std::string>()));
            for (const auto& p : jt.at("post")) t.post.push_back(a.intern(p.get<std::string>()));
            if (t.pre.size() != t.post.size())
                throw std::runtime_error("concrete transition pre/post arity mismatch");
            a.concrete.push_back(std::move(t));
        } else if (kind == "pattern") {
            PatternTransition t;
            t.from = a.intern(jt.at("from").get<std::string>());
            t.to = a.intern(jt.at("to").get<std::string>());
            for (const auto& p : jt.at("pre")) t.pre.push_back(a.intern(p.get<std::string>()));
            for (const auto& p : jt.at("post")) t.post.push_back(a.intern(p.get<std::string>()));
            if (jt.contains("fresh")) t.fresh = a.intern(jt.at("fresh").get<std::string>());
            if (t.pre.size() != t.post.size())
                throw std::runtime_error("pattern transition pre/post arity mismatch");
            a.patterns.push_back(std::move(t));
        } else {
            throw std::runtime_error("unknown transition kind '" + kind + "'");
        }
    }
    if (j.contains("memory")) {
        for (const auto& e : j.at("memory")) {
            MemoryEntry m;
            if (e.contains("parent") && !e.at("parent").is_null())
                m.parent = e.at("parent").get<std::size_t>();
            m.label = e.at("label").get<std::string>();
            a.intern(m.label);
            a.initial_memory.push_back(std::move(m));
        }
    }
    return a;
}

Automaton load_automaton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open automaton file '" + path + "'");
    Json j;
    in >> j;
    return automaton_from_json(j);
}

} // namespace pihier
