#ifndef PIHIER_HIERARCHY_HPP
#define PIHIER_HIERARCHY_HPP

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "pihier/forest.hpp"
#include "pihier/normal_form.hpp"

namespace pihier {

enum class Verdict { True, False, Unknown };

// linked/tied/name-tied over the active indices of one normal form.
// tied is reflexive on every index; see migratable() for why.
class TiedRelation {
public:
    TiedRelation(const NormalForm& nf);

    std::size_t count() const { return n_; }
    bool linked(std::size_t i, std::size_t j) const { return linked_[i * n_ + j]; }
    bool tied(std::size_t i, std::size_t j) const { return i == j || tied_[i * n_ + j]; }
    bool name_tied(const Name& y, std::size_t i) const;

    // A_i is migratable in a(y).P.
    bool migratable(const Name& binder, std::size_t i) const { return name_tied(binder, i); }

    // True when migratable(binder, i) holds only through the reflexive step
    // (A_i mentions the binder but shares no restricted name with anything).
    bool reflexive_only(const Name& binder, std::size_t i) const;

    const std::set<Name>& fn_of(std::size_t i) const { return fns_[i]; }

private:
    std::size_t n_ = 0;
    std::vector<char> linked_;
    std::vector<char> tied_; // transitive closure of linked_
    std::vector<std::set<Name>> fns_;
    std::set<Name> restricted_;
};

TiedRelation tied_analysis(const NormalForm& nf);

// Every name-trace strictly increasing in T.
bool t_compatible_forest(const LabelledForest& f, const BaseForest& T);

// Phi_T: the canonical T-compatible forest of a normal form. Requires full
// annotations with base types in T.
LabelledForest phi(const NormalForm& nf, const BaseForest& T);

// P is T-compatible iff Phi_T(nf(P)) is in F[[P]].
Verdict t_compatible_term(const Term& t, const BaseForest& T);

// Every subterm (prefix continuations included) T-compatible.
Verdict t_shaped(const Term& t, const BaseForest& T);

// Length of the longest strictly increasing chain in T.
std::size_t depth_bound(const BaseForest& T);

} // namespace pihier

#endif
