#ifndef PIHIER_NORMAL_FORM_HPP
#define PIHIER_NORMAL_FORM_HPP

#include <memory>
#include <optional>
#include <vector>

#include "pihier/term.hpp"

namespace pihier {

struct SeqTerm;
using SeqPtr = std::shared_ptr<const SeqTerm>;

struct Restriction {
    Name name;
    std::optional<ChanType> type;
};

// nu x1...xn.(A1 | ... | Am) with every inactive subterm in normal form.
// Empty restrictions and actives encode 0; zero actives forces zero
// restrictions (nu x.0 == 0).
struct NormalForm {
    std::vector<Restriction> restrictions;
    std::vector<SeqPtr> actives;

    bool is_nil() const { return restrictions.empty() && actives.empty(); }
};

struct NfBranch {
    Prefix prefix;
    NormalForm cont;
};

struct SeqTerm {
    bool replicated = false;
    std::vector<NfBranch> branches; // non-empty
};

SeqPtr mk_seq(bool replicated, std::vector<NfBranch> branches);

NormalForm normalize(const Term& t);

// Back to the AST (nu-prefixed parallel composition of sequential terms).
Term to_term(const NormalForm& nf);
Term seq_to_term(const SeqTerm& s);

std::set<Name> free_names(const NormalForm& nf);
std::set<Name> free_names(const SeqTerm& s);

} // namespace pihier

#endif
