#ifndef PIHIER_CANONICAL_HPP
#define PIHIER_CANONICAL_HPP

#include <stdexcept>
#include <string>

#include "pihier/normal_form.hpp"

namespace pihier {

// Raised when deciding structural congruence would need more than the
// configured search budget; callers fall back to "unknown".
struct SizeBoundExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using CanonicalKey = std::string;

struct CanonicalOptions {
    // Orderings tried while breaking symmetric binder ties.
    std::size_t max_orderings = 10000;
};

// canonical(P) == canonical(Q) iff P == Q (structural congruence), for terms
// within the search budget. Keys are computed on replication-normal
// presentations: unguarded copies of a replicated M are absorbed into !M and
// unused restrictions dropped before keying.
CanonicalKey canonical(const Term& t, const CanonicalOptions& opts = {});
CanonicalKey canonical(const NormalForm& nf, const CanonicalOptions& opts = {});

bool congruent(const Term& p, const Term& q, const CanonicalOptions& opts = {});

// Key of a sequential term with free names resolved by uid; used to compare
// actives of one normal form (replication absorption, forest labels).
std::string rigid_seq_key(const SeqTerm& s);

} // namespace pihier

#endif
