#ifndef PIHIER_SYSTEMS_HPP
#define PIHIER_SYSTEMS_HPP

#include "pihier/bisim.hpp"
#include "pihier/canonical.hpp"
#include "pihier/ndcma.hpp"
#include "pihier/semantics.hpp"

namespace pihier {

// reduction semantics of a pi term
struct PiSystem {
    using State = NormalForm;
    NormalForm init;
    State initial() { return init; }
    std::vector<State> successors(const State& s) {
        std::vector<State> out;
        for (const auto& r : redexes(s)) out.push_back(reduce(s, r));
        return out;
    }
    std::string key(const State& s) { return canonical(s); }
};

// ready-to-ready rounds of an automaton
struct ReadySystem {
    const Automaton& a;
    Config init;
    using State = Config;
    State initial() { return init; }
    std::vector<State> successors(const State& s) { return ready_step(a, s); }
    std::string key(const State& s) { return config_key(a, s); }
};

// single steps of an automaton
struct StepSystem {
    const Automaton& a;
    Config init;
    using State = Config;
    State initial() { return init; }
    std::vector<State> successors(const State& s) { return step(a, s); }
    std::string key(const State& s) { return config_key(a, s); }
};

// ->z rounds of an NDCMA pi encoding
struct ZSystem {
    const NdaEncoding& enc;
    NormalForm init;
    using State = NormalForm;
    State initial() { return init; }
    std::vector<State> successors(const State& s) { return z_successors(s, enc); }
    std::string key(const State& s) { return canonical(s); }
};

inline BisimResult pi_nda_bisim(const PiEncoding& enc, const BaseForest& T, std::size_t rounds,
                                std::size_t budget = 200000) {
    PiSystem pi{normalize(enc.chi_term)};
    ReadySystem ready{enc.automaton, initial_config(enc.automaton)};
    return bounded_bisim(
        pi, ready, rounds,
        [&](const NormalForm& s, const Config& c) {
            return sim_check(to_term(s), enc.automaton, c, T);
        },
        budget);
}

inline BisimResult nda_pi_bisim(const Automaton& a, const NdaEncoding& enc, std::size_t rounds,
                                std::size_t budget = 200000) {
    StepSystem aut{a, initial_config(a)};
    ZSystem z{enc, normalize(enc.term)};
    return bounded_bisim(
        aut, z, rounds,
        [&](const Config& c, const NormalForm& s) {
            auto obs = z_observation(s, enc);
            return obs && *obs == a.state_name(c.state);
        },
        budget);
}

} // namespace pihier

#endif
