#ifndef PIHIER_TERM_HPP
#define PIHIER_TERM_HPP

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pihier/names.hpp"
#include "pihier/types.hpp"

namespace pihier {

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

enum class PrefixKind { Input, Output, Tau };

struct Prefix {
    PrefixKind kind = PrefixKind::Tau;
    Name channel;  // Input/Output
    Name object;   // Input: binder, Output: payload

    static Prefix input(Name chan, Name binder) { return {PrefixKind::Input, std::move(chan), std::move(binder)}; }
    static Prefix output(Name chan, Name payload) { return {PrefixKind::Output, std::move(chan), std::move(payload)}; }
    static Prefix tau() { return {PrefixKind::Tau, {}, {}}; }
};

struct Branch {
    Prefix prefix;
    Term cont;
};

enum class TermKind { Nil, Restrict, Par, Choice, Repl };

// Immutable AST. Choice branches are non-empty; a bare prefix pi.P is the
// singleton choice. Repl wraps a Choice only.
struct TermNode {
    TermKind kind = TermKind::Nil;

    // Restrict
    Name binder;
    std::optional<ChanType> annot;
    Term body;

    // Par
    Term left, right;

    // Choice
    std::vector<Branch> branches;

    // Repl
    Term inner;
};

Term mk_nil();
Term mk_restrict(Name binder, std::optional<ChanType> annot, Term body);
Term mk_par(Term left, Term right);
Term mk_choice(std::vector<Branch> branches);
Term mk_prefix(Prefix p, Term cont); // singleton choice
Term mk_repl(Term choice);           // argument must be Nil or Choice; !0 collapses to 0

struct NameSets {
    std::set<Name> free;
    std::set<Name> bound;
    std::set<Name> active_restrictions;
};

NameSets name_sets(const Term& t);
std::set<Name> free_names(const Term& t);

// Every free occurrence of `from` becomes `to`; annotations untouched.
// Throws if a binder for `to` would capture (violated precondition).
Term substitute(const Term& t, const Name& from, const Name& to);

// Alpha-renames so each name is bound at most once and fn and bn are
// disjoint. Deterministic and idempotent up to alpha.
Term ensure_name_uniq(const Term& t);
bool satisfies_name_uniq(const Term& t);

// All restriction binders with their annotations, active or not.
std::vector<std::pair<Name, std::optional<ChanType>>> all_restrictions(const Term& t);

// Plain alpha-equality (no structural laws).
bool alpha_equal(const Term& a, const Term& b);

} // namespace pihier

#endif
