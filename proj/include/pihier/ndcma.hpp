#ifndef PIHIER_NDCMA_HPP
#define PIHIER_NDCMA_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/semantics.hpp"
#include "pihier/typing.hpp"

namespace pihier {

using StateId = std::uint32_t;
using DataValue = std::uint32_t;

// The fresh marker in concrete transition preconditions.
inline constexpr StateId kFreshSlot = static_cast<StateId>(-1);

// Lazily materialised view of the full infinite nested dataset: allocating a
// fresh child is always possible.
class DataStore {
public:
    DataValue alloc(std::optional<DataValue> parent);
    std::optional<DataValue> parent(DataValue d) const;
    std::size_t level(DataValue d) const { return levels_[d]; }
    std::size_t size() const { return levels_.size(); }
    // Root-to-d chain, inclusive.
    std::vector<DataValue> path(DataValue d) const;

private:
    std::vector<DataValue> parents_; // self = root (level 1)
    std::vector<std::uint32_t> levels_;
};

// Finitely supported labelling; absent = fresh.
using ClassMemoryFn = std::map<DataValue, StateId>;

struct ConcreteTransition {
    StateId from = 0, to = 0;
    std::vector<StateId> pre;  // per level 1..i; kFreshSlot allowed
    std::vector<StateId> post; // all real states
};

// <q, l1..ln | q', l1'..ln' (+ fresh)>: matched against descending chains of
// labelled values on one fully-labelled path; unmatched positions keep their
// labels. With `fresh` set, a new child of the deepest match is allocated.
struct PatternTransition {
    StateId from = 0, to = 0;
    std::vector<StateId> pre;
    std::vector<StateId> post;
    std::optional<StateId> fresh;
};

struct MemoryEntry {
    std::optional<std::size_t> parent; // index into the entry list
    std::string label;
};

class Automaton {
public:
    StateId intern(const std::string& name);
    std::optional<StateId> find_state(const std::string& name) const;
    const std::string& state_name(StateId s) const { return names_[s]; }
    std::size_t state_count() const { return names_.size(); }

    std::size_t level = 0;
    StateId initial_state = 0;
    std::optional<StateId> garbage_state;
    std::vector<ConcreteTransition> concrete;
    std::vector<PatternTransition> patterns;
    std::vector<MemoryEntry> initial_memory;

private:
    std::vector<std::string> names_;
    std::map<std::string, StateId> ids_;
};

struct Config {
    StateId state = 0;
    DataStore store;
    ClassMemoryFn memory;
};

Config initial_config(const Automaton& a);

// All successors over all enabled transitions, one canonical representative
// per fresh slot.
std::vector<Config> step(const Automaton& a, const Config& c);

// Isomorphism key modulo garbage values.
std::string config_key(const Automaton& a, const Config& c);

struct ReadyStepOptions {
    std::size_t max_interior = 200000;
};

struct InteriorBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All ready-labelled configurations reachable through ready-free interiors.
std::vector<Config> ready_step(const Automaton& a, const Config& c,
                               const ReadyStepOptions& opts = {});

// ---- pi -> NDCMA ---------------------------------------------------------

struct PiEncoding {
    Automaton automaton;
    BaseForest forest;
    // chi-renamed presentation of the source term (initial pi state).
    Term chi_term;
};

struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EncodeOptions {
    // Skip the typecheck gate (T-shapedness is still required). Lets the
    // simply-untypable self-send nu a.(a<a> | a(x)) through.
    bool require_typable = true;
};

// Encodes a closed, typably hierarchical annotated term. States are derived
// from Deriv[P] plus the ready/send/rec/marker states; the initial memory
// realises Phi'(P). Tau prefixes are simulated by one-party rounds.
PiEncoding encode_pi(const Term& t, const BaseForest& T, const EncodeOptions& opts = {});

// The ~ relation: does an injective embedding of Phi'(t) into the memory
// exist (garbage values excepted)?
bool sim_check(const Term& t, const Automaton& a, const Config& c, const BaseForest& T);

// ---- NDCMA -> pi ---------------------------------------------------------

struct NdaEncoding {
    Term term;
    BaseForest forest;
    TypeEnv env;    // { r : t_r }
    Name r;
    // base type of c^i_q -> (level i, state name)
    std::map<BaseTypeId, std::pair<std::size_t, std::string>> chan_info;
};

// P[[A]] for an automaton with all-fresh initial memory and concrete
// transitions only (fresh slots forming a suffix).
NdaEncoding encode_nda(const Automaton& a);

// Observation for ->z: the state q of the unique active output on a level-0
// channel, when the term has that shape.
std::optional<std::string> z_observation(const NormalForm& nf, const NdaEncoding& enc);

struct ZStepOptions {
    std::size_t max_interior = 100000;
};

// ->z successors: reduce through observation-free intermediates.
std::vector<NormalForm> z_successors(const NormalForm& nf, const NdaEncoding& enc,
                                     const ZStepOptions& opts = {});

} // namespace pihier

#endif
