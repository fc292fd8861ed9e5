#ifndef PIHIER_SEMANTICS_HPP
#define PIHIER_SEMANTICS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pihier/canonical.hpp"
#include "pihier/normal_form.hpp"

namespace pihier {

struct Redex {
    enum class Kind { Sync, TauStep } kind = Kind::TauStep;
    // Sync
    std::size_t sender = 0, sender_branch = 0;
    std::size_t receiver = 0, receiver_branch = 0;
    Name channel;
    // TauStep
    std::size_t index = 0, branch = 0;

    std::string describe() const;
};

std::vector<Redex> redexes(const NormalForm& p);
NormalForm reduce(const NormalForm& p, const Redex& r);

struct ReachEdge {
    CanonicalKey from;
    std::string redex;
    CanonicalKey to;
};

struct ReachGraph {
    CanonicalKey initial;
    std::map<CanonicalKey, NormalForm> states;
    std::vector<ReachEdge> edges;
    bool truncated = false;
};

struct ReachOptions {
    std::size_t max_states = 1000;
    std::size_t max_size = 0;   // 0 = unlimited; counts restrictions per state
    unsigned workers = 1;        // frontier expansion fan-out
};

// BFS over reduce/redexes, deduplicated by canonical keys. The resulting
// graph is independent of worker scheduling.
ReachGraph reach(const Term& t, const ReachOptions& opts = {});

// der(P): sequential subterms, active or not.
std::vector<SeqPtr> derivatives(const Term& t);

// Deriv[P]: substitution instances of der(P) over the chi alphabet plus
// fn(P), filtered to type-consistent substitutions when name types are
// derivable (one instance per derivative in that case).
std::vector<SeqPtr> deriv_closure(const Term& t, const BaseForest& T, const TypeEnv* env = nullptr);

// Renames each restriction (x : ty) to (chi_base(ty) : ty); distinct uids
// survive so name-uniqueness machinery still works. Requires forest_of(t)
// T-compatible (no two equal base types on a path).
Term chi_rename(const Term& t, const BaseForest& T);

// The chi name for a base type (identifier "chi_<base>" with fresh uid).
std::string chi_ident(const BaseTypeId& base);

// Declared type of every name: restriction annotations plus input binders
// typed by their channel's payload.
std::map<Name, ChanType> name_types(const Term& t, const TypeEnv* env = nullptr);

} // namespace pihier

#endif
