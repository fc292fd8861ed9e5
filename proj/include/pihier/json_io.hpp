#ifndef PIHIER_JSON_IO_HPP
#define PIHIER_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include "pihier/forest.hpp"
#include "pihier/ndcma.hpp"
#include "pihier/semantics.hpp"

namespace pihier {

using Json = nlohmann::json;

// BaseForest file: {"nodes":["S","C"],"edges":[["S","C"]]} meaning S <| C.
Json base_forest_to_json(const BaseForest& T);
BaseForest base_forest_from_json(const Json& j);
BaseForest load_base_forest(const std::string& path);

Json labelled_forest_to_json(const LabelledForest& f);
std::string labelled_forest_to_dot(const LabelledForest& f);

Json reach_graph_to_json(const ReachGraph& g);
std::string reach_graph_to_dot(const ReachGraph& g);

// Automaton JSON: {level, states[], initial, transitions:[{kind, ...}],
// memory:[{value, parent, label}]}.
Json automaton_to_json(const Automaton& a);
Automaton automaton_from_json(const Json& j);
Automaton load_automaton(const std::string& path);

} // namespace pihier

#endif
