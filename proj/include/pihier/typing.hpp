#ifndef PIHIER_TYPING_HPP
#define PIHIER_TYPING_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/normal_form.hpp"

namespace pihier {

struct TypingProblem {
    NormalForm term;
    BaseForest forest;
    TypeEnv env;
};

struct RuleViolation {
    std::string rule;       // Par/Choice/Repl/Tau/Out/In
    std::string location;   // printed subterm
    std::string detail;     // the failed comparison
};

struct DerivationNode {
    std::string rule;
    std::string subject;
    std::vector<DerivationNode> premises;
};

struct TypecheckResult {
    bool ok = false;
    DerivationNode derivation;
    std::vector<RuleViolation> violations;
    // In-rule migratable judgements that hold only via the reflexive step of
    // tied-to; logged so the reading stays auditable.
    std::vector<std::string> reflexive_migration_notes;
};

TypecheckResult typecheck(const TypingProblem& problem);

bool p_safe(const TypeEnv& env, const Term& t, const BaseForest& T);

// ---- Inference ----------------------------------------------------------

using TypeVarId = std::uint32_t;
using BaseVarId = std::uint32_t;

struct OrderAtom {
    bool strict = true;
    BaseVarId lhs = 0, rhs = 0; // lhs < rhs  or  lhs <= rhs
    std::string provenance;
};

// One per In prefix: base(ty_x) <= t_a  OR  the conjunction of strict atoms
// for migratable continuations.
struct InDisjunction {
    OrderAtom nonstrict;
    std::vector<OrderAtom> strict_conj;
    std::string provenance;
};

struct UnifyEquation {
    TypeVarId var = 0;
    // var = base[payload]
    BaseVarId base = 0;
    TypeVarId payload = 0;
    std::string provenance;
};

struct ConstraintSet {
    // union-find state and shape equations live in the generator; what is
    // exposed is the solved view over base variables.
    std::vector<OrderAtom> order_atoms;
    std::vector<InDisjunction> disjunctions;
    std::size_t base_var_count = 0;
    std::map<Name, TypeVarId> name_vars;
    // occurs-check failure (process cannot be simply typed)
    std::optional<std::string> occurs_failure;
    // distinct base constants forced equal
    std::optional<std::string> constant_clash;

    // internal: resolved shapes for reconstruction of annotations
    struct Shape { BaseVarId base; std::optional<TypeVarId> payload; };
    std::map<TypeVarId, Shape> shapes;
    std::map<BaseVarId, std::string> base_constants;
    std::map<BaseVarId, std::vector<std::string>> base_names; // names sharing a base
};

ConstraintSet generate_constraints(const Term& t, const TypeEnv* env = nullptr);

struct SolveResult {
    bool satisfiable = false;
    std::vector<std::string> conflict;          // atoms of an unsatisfiable cycle
    // representative -> set of base vars it stands for, plus the chosen
    // partial order as edges rep -> rep
    std::vector<std::pair<BaseVarId, BaseVarId>> strict_order;
    std::vector<BaseVarId> representatives;
    std::map<BaseVarId, BaseVarId> rep_of;
    std::vector<bool> branch_choice;            // per disjunction: true = nonstrict side
};

SolveResult solve(const ConstraintSet& cs);

struct TypableWitness {
    BaseForest forest;
    std::map<Name, ChanType> annotations; // for restriction binders
    TypeEnv env;                           // for free names
    Term term;                             // the annotated term
};

struct Untypable {
    std::vector<std::string> conflict;
};

struct TypableButNotTShaped {
    std::size_t explored_extensions = 0;
    std::string details;
};

struct InferenceResult {
    std::variant<TypableWitness, Untypable, TypableButNotTShaped> verdict;
    bool is_typable() const { return std::holds_alternative<TypableWitness>(verdict); }
};

struct InferOptions {
    std::size_t extension_budget = 256;
};

InferenceResult infer(const Term& t, const InferOptions& opts = {});

// Applies a witness's annotations to the bare term's restrictions.
Term annotate(const Term& t, const std::map<Name, ChanType>& annotations);

} // namespace pihier

#endif
