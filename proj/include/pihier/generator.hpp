#ifndef PIHIER_GENERATOR_HPP
#define PIHIER_GENERATOR_HPP

#include <cstdint>
#include <random>

#include "pihier/ndcma.hpp"
#include "pihier/term.hpp"
#include "pihier/types.hpp"

namespace pihier {

// Seeded generators for the randomized suites.
class TermGen {
public:
    explicit TermGen(std::uint64_t seed) : rng_(seed) {}

    // Random annotated term with at most max_restr restrictions; annotations
    // drawn from T (arbitrary, not necessarily typable).
    Term annotated_term(const BaseForest& T, std::size_t max_restr);

    // Random closed unannotated term biased toward typability.
    Term closed_term(std::size_t size_budget);

    // Random closed tau-free term that infers Typable; retries up to
    // `attempts`, falling back to a fixed client/server-like shape.
    Term typable_term(std::size_t size_budget, std::size_t attempts = 60, bool tau_free = false);

    // Random chain forest with n nodes named t1..tn.
    BaseForest chain_forest(std::size_t n);

    // Random NDCMA: <= max_states states, level <= max_level, <= max_trans
    // concrete transitions with fresh slots forming a suffix.
    Automaton automaton(std::size_t max_states, std::size_t max_level, std::size_t max_trans);

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::size_t pick(std::size_t lo, std::size_t hi); // inclusive
};

} // namespace pihier

#endif
