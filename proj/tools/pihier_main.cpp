#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pihier/canonical.hpp"
#include "pihier/forest.hpp"
#include "pihier/hierarchy.hpp"
#include "pihier/json_io.hpp"
#include "pihier/ndcma.hpp"
#include "pihier/parser.hpp"
#include "pihier/printer.hpp"
#include "pihier/semantics.hpp"
#include "pihier/typing.hpp"

#include "pihier/systems.hpp"

namespace {

using namespace pihier;

constexpr int kSchemaVersion = 1;

struct Report {
    std::string command;
    std::string verdict = "ok"; // ok | negative | unknown | error
    Json details = Json::object();
    std::map<std::string, double> timings;
    bool json = false;

    int exit_code() const {
        if (verdict == "ok") return 0;
        if (verdict == "error") return 2;
        return 1; // negative / unknown
    }

    void emit(std::ostream& os) const {
        if (json) {
            Json j;
            j["schema_version"] = kSchemaVersion;
            j["command"] = command;
            j["verdict"] = verdict;
            j["details"] = details;
            j["timings_ms"] = timings;
            os << j.dump(2) << "\n";
            return;
        }
        os << command << ": " << verdict << "\n";
        if (!details.empty()) os << details.dump(2) << "\n";
    }
};

struct Timer {
    Report& report;
    std::string stage;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    Timer(Report& r, std::string s) : report(r), stage(std::move(s)) {}
    ~Timer() {
        report.timings[stage] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

TypeEnv parse_env(const std::vector<std::string>& items, const Term& t) {
    TypeEnv env;
    auto frees = free_names(t);
    for (const auto& item : items) {
        auto pos = item.find(':');
        if (pos == std::string::npos)
            throw std::runtime_error("--env expects name:TYPE, got '" + item + "'");
        std::string name = item.substr(0, pos);
        ChanType ty = parse_chan_type(item.substr(pos + 1));
        bool found = false;
        for (const auto& n : frees) {
            if (n.ident == name) {
                env.bind(n, ty);
                found = true;
            }
        }
        if (!found) throw std::runtime_error("--env name '" + name + "' is not free in the term");
    }
    return env;
}

std::string verdict_str(Verdict v) {
    switch (v) {
    case Verdict::True: return "true";
    case Verdict::False: return "false";
    default: return "unknown";
    }
}

BisimResult run_pi_nda_bisim(const Term& t, const BaseForest& T, std::size_t rounds) {
    PiEncoding enc = encode_pi(t, T);
    return pi_nda_bisim(enc, T, rounds);
}

BisimResult run_nda_pi_bisim(const Automaton& a, std::size_t rounds) {
    NdaEncoding enc = encode_nda(a);
    return nda_pi_bisim(a, enc, rounds);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"typably hierarchical pi-calculus toolkit"};
    app.require_subcommand(1);

    bool json = false;
    app.add_flag("--json", json, "emit a JSON report");

    std::string term_file, forest_file, out_file, dot_file, automaton_file;
    std::vector<std::string> env_items;
    std::size_t max_states = 1000, rounds = 6, depth_bound_opt = 8;
    bool total_order = true;

    auto* cmd_parse = app.add_subcommand("parse", "parse a term and print it back");
    cmd_parse->add_option("file", term_file)->required();

    auto* cmd_nf = app.add_subcommand("nf", "normal form of a term");
    cmd_nf->add_option("file", term_file)->required();

    auto* cmd_forest = app.add_subcommand("forest", "forest representation of a term");
    cmd_forest->add_option("file", term_file)->required();
    cmd_forest->add_option("--dot", dot_file);

    auto* cmd_phi = app.add_subcommand("phi", "canonical T-compatible forest");
    cmd_phi->add_option("file", term_file)->required();
    cmd_phi->add_option("--forest", forest_file)->required();
    cmd_phi->add_option("--dot", dot_file);

    auto* cmd_compat = app.add_subcommand("compat", "T-compatibility of a term");
    cmd_compat->add_option("file", term_file)->required();
    cmd_compat->add_option("--forest", forest_file)->required();

    auto* cmd_shaped = app.add_subcommand("shaped", "T-shapedness of a term");
    cmd_shaped->add_option("file", term_file)->required();
    cmd_shaped->add_option("--forest", forest_file)->required();

    auto* cmd_typecheck = app.add_subcommand("typecheck", "check a term against a base forest");
    cmd_typecheck->add_option("file", term_file)->required();
    cmd_typecheck->add_option("--forest", forest_file)->required();
    cmd_typecheck->add_option("--env", env_items, "type for a free name, name:TYPE");

    auto* cmd_infer = app.add_subcommand("infer", "infer a forest and annotations");
    cmd_infer->add_option("file", term_file)->required();
    cmd_infer->add_option("--emit-forest", out_file);
    cmd_infer->add_flag("--total-order", total_order, "synthesise a chain forest (default)");

    auto* cmd_explore = app.add_subcommand("explore", "bounded reachability exploration");
    cmd_explore->add_option("file", term_file)->required();
    cmd_explore->add_option("--max-states", max_states);
    cmd_explore->add_option("--dot", dot_file);

    auto* cmd_depth = app.add_subcommand("depth", "exact depth via the forest oracle");
    cmd_depth->add_option("file", term_file)->required();
    cmd_depth->add_option("--bound", depth_bound_opt, "restriction bound for the oracle");

    auto* cmd_nda = app.add_subcommand("nda", "nested data class memory automata");
    cmd_nda->require_subcommand(1);
    auto* nda_sim = cmd_nda->add_subcommand("simulate", "explore automaton configurations");
    nda_sim->add_option("--automaton", automaton_file)->required();
    nda_sim->add_option("--max-states", max_states);
    auto* nda_from_pi = cmd_nda->add_subcommand("encode-from-pi", "pi term to automaton");
    nda_from_pi->add_option("file", term_file)->required();
    nda_from_pi->add_option("--forest", forest_file)->required();
    nda_from_pi->add_option("--out", out_file);
    auto* nda_to_pi = cmd_nda->add_subcommand("encode-to-pi", "automaton to pi term");
    nda_to_pi->add_option("--automaton", automaton_file)->required();
    nda_to_pi->add_option("--out", out_file);

    auto* cmd_bisim = app.add_subcommand("bisim", "bounded bisimulation check");
    cmd_bisim->add_option("--pi", term_file, "pi term (needs --forest)");
    cmd_bisim->add_option("--forest", forest_file);
    cmd_bisim->add_option("--nda", automaton_file, "automaton JSON");
    cmd_bisim->add_option("--rounds", rounds);

    for (auto* sc : app.get_subcommands({})) {
        sc->fallthrough();
        for (auto* nested : sc->get_subcommands({})) nested->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Report report;
    report.json = json;

    try {
        if (cmd_parse->parsed()) {
            report.command = "parse";
            Timer t(report, "parse");
            Term term = parse_term(slurp(term_file));
            report.details["printed"] = print_term(term);
        } else if (cmd_nf->parsed()) {
            report.command = "nf";
            Timer t(report, "nf");
            Term term = parse_term(slurp(term_file));
            report.details["normal_form"] = print_term(to_term(normalize(term)));
        } else if (cmd_forest->parsed()) {
            report.command = "forest";
            Timer t(report, "forest");
            Term term = parse_term(slurp(term_file));
            LabelledForest f = forest_of(ensure_name_uniq(term));
            report.details["forest"] = labelled_forest_to_json(f);
            report.details["height"] = height(f);
            report.details["height_nu"] = height_nu(f);
            if (!dot_file.empty()) write_file(dot_file, labelled_forest_to_dot(f));
        } else if (cmd_phi->parsed()) {
            report.command = "phi";
            Timer t(report, "phi");
            Term term = ensure_name_uniq(parse_term(slurp(term_file)));
            BaseForest T = load_base_forest(forest_file);
            LabelledForest f = phi(normalize(term), T);
            report.details["forest"] = labelled_forest_to_json(f);
            if (!dot_file.empty()) write_file(dot_file, labelled_forest_to_dot(f));
        } else if (cmd_compat->parsed()) {
            report.command = "compat";
            Timer t(report, "compat");
            Term term = parse_term(slurp(term_file));
            BaseForest T = load_base_forest(forest_file);
            Verdict v = t_compatible_term(term, T);
            report.details["t_compatible"] = verdict_str(v);
            report.verdict = v == Verdict::True ? "ok" : (v == Verdict::False ? "negative" : "unknown");
        } else if (cmd_shaped->parsed()) {
            report.command = "shaped";
            Timer t(report, "shaped");
            Term term = parse_term(slurp(term_file));
            BaseForest T = load_base_forest(forest_file);
            Verdict v = t_shaped(term, T);
            report.details["t_shaped"] = verdict_str(v);
            report.verdict = v == Verdict::True ? "ok" : (v == Verdict::False ? "negative" : "unknown");
        } else if (cmd_typecheck->parsed()) {
            report.command = "typecheck";
            Timer t(report, "typecheck");
            Term term = ensure_name_uniq(parse_term(slurp(term_file)));
            BaseForest T = load_base_forest(forest_file);
            TypeEnv env = parse_env(env_items, term);
            TypecheckResult tc = typecheck(TypingProblem{normalize(term), T, env});
            report.details["typable"] = tc.ok;
            report.details["violations"] = Json::array();
            for (const auto& v : tc.violations)
                report.details["violations"].push_back(
                    Json{{"rule", v.rule}, {"at", v.location}, {"detail", v.detail}});
            for (const auto& n : tc.reflexive_migration_notes)
                report.details["notes"].push_back(n);
            report.verdict = tc.ok ? "ok" : "negative";
        } else if (cmd_infer->parsed()) {
            report.command = "infer";
            Timer t(report, "infer");
            Term term = parse_term(slurp(term_file));
            InferenceResult r = infer(term);
            if (r.is_typable()) {
                const auto& w = std::get<TypableWitness>(r.verdict);
                report.details["typably_hierarchical"] = true;
                report.details["forest"] = base_forest_to_json(w.forest);
                report.details["annotated"] = print_term(w.term);
                if (!out_file.empty())
                    write_file(out_file, base_forest_to_json(w.forest).dump(2) + "\n");
            } else if (std::holds_alternative<Untypable>(r.verdict)) {
                report.details["typably_hierarchical"] = false;
                report.details["conflict"] = std::get<Untypable>(r.verdict).conflict;
                report.verdict = "negative";
            } else {
                const auto& v = std::get<TypableButNotTShaped>(r.verdict);
                report.details["typably_hierarchical"] = false;
                report.details["typable_but_not_t_shaped"] = true;
                report.details["explored_extensions"] = v.explored_extensions;
                report.details["details"] = v.details;
                report.verdict = "negative";
            }
        } else if (cmd_explore->parsed()) {
            report.command = "explore";
            Timer t(report, "explore");
            Term term = parse_term(slurp(term_file));
            ReachOptions opts;
            opts.max_states = max_states;
            ReachGraph g = reach(term, opts);
            report.details["graph"] = reach_graph_to_json(g);
            report.details["states"] = g.states.size();
            report.details["truncated"] = g.truncated;
            if (!dot_file.empty()) write_file(dot_file, reach_graph_to_dot(g));
        } else if (cmd_depth->parsed()) {
            report.command = "depth";
            Timer t(report, "depth");
            Term term = parse_term(slurp(term_file));
            report.details["depth"] = depth_exact(term, depth_bound_opt);
            report.details["nest_nu"] = nest_nu(term);
        } else if (nda_sim->parsed()) {
            report.command = "nda simulate";
            Timer t(report, "simulate");
            Automaton a = load_automaton(automaton_file);
            Config c0 = initial_config(a);
            std::set<std::string> seen{config_key(a, c0)};
            std::vector<Config> frontier{c0};
            while (!frontier.empty() && seen.size() < max_states) {
                std::vector<Config> next;
                for (const auto& c : frontier) {
                    for (auto& s : step(a, c)) {
                        if (seen.size() >= max_states) break;
                        if (seen.insert(config_key(a, s)).second) next.push_back(std::move(s));
                    }
                }
                frontier = std::move(next);
            }
            report.details["configurations"] = seen.size();
            report.details["truncated"] = seen.size() >= max_states;
        } else if (nda_from_pi->parsed()) {
            report.command = "nda encode-from-pi";
            Timer t(report, "encode");
            Term term = parse_term(slurp(term_file));
            BaseForest T = load_base_forest(forest_file);
            PiEncoding enc = encode_pi(term, T);
            Json j = automaton_to_json(enc.automaton);
            report.details["states"] = enc.automaton.state_count();
            report.details["transitions"] =
                enc.automaton.patterns.size() + enc.automaton.concrete.size();
            if (!out_file.empty()) write_file(out_file, j.dump(2) + "\n");
            else report.details["automaton"] = j;
        } else if (nda_to_pi->parsed()) {
            report.command = "nda encode-to-pi";
            Timer t(report, "encode");
            Automaton a = load_automaton(automaton_file);
            NdaEncoding enc = encode_nda(a);
            report.details["term"] = print_term(enc.term);
            report.details["forest"] = base_forest_to_json(enc.forest);
            if (!out_file.empty()) write_file(out_file, print_term(enc.term) + "\n");
        } else if (cmd_bisim->parsed()) {
            report.command = "bisim";
            Timer t(report, "bisim");
            BisimResult r;
            if (!term_file.empty()) {
                if (forest_file.empty())
                    throw std::runtime_error("bisim --pi needs --forest");
                Term term = parse_term(slurp(term_file));
                BaseForest T = load_base_forest(forest_file);
                r = run_pi_nda_bisim(term, T, rounds);
            } else if (!automaton_file.empty()) {
                Automaton a = load_automaton(automaton_file);
                r = run_nda_pi_bisim(a, rounds);
            } else {
                throw std::runtime_error("bisim needs --pi or --nda");
            }
            report.details["bisimilar"] = r.bisimilar;
            report.details["rounds"] = rounds;
            report.details["pairs_explored"] = r.pairs_explored;
            if (!r.bisimilar) {
                report.details["violated_clause"] = r.violated_clause;
                report.details["trace"] = r.trace;
                report.verdict = r.budget_exceeded ? "unknown" : "negative";
            }
        }
    } catch (const ParseError& e) {
        report.verdict = "error";
        report.details["error"] = e.what();
        report.emit(std::cout);
        return 2;
    } catch (const std::exception& e) {
        report.verdict = "error";
        report.details["error"] = e.what();
        report.emit(std::cout);
        return 2;
    }

    report.emit(std::cout);
    return report.exit_code();
}
