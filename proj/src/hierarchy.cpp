#include "pihier/hierarchy.hpp"

#include <algorithm>

#include "pihier/canonical.hpp"

namespace pihier {

TiedRelation::TiedRelation(const NormalForm& nf) {
    n_ = nf.actives.size();
    for (const auto& r : nf.restrictions) restricted_.insert(r.name);
    fns_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) fns_[i] = free_names(*nf.actives[i]);
    linked_.assign(n_ * n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
            bool shares = false;
            for (const auto& x : fns_[i]) {
                if (restricted_.count(x) && fns_[j].count(x)) { shares = true; break; }
            }
            if (shares) linked_[i * n_ + j] = linked_[j * n_ + i] = 1;
        }
    }
    tied_ = linked_;
    for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (tied_[i * n_ + k] && tied_[k * n_ + j]) tied_[i * n_ + j] = 1;
}

bool TiedRelation::name_tied(const Name& y, std::size_t i) const {
    for (std::size_t j = 0; j < n_; ++j)
        if (fns_[j].count(y) && tied(j, i)) return true;
    return false;
}

bool TiedRelation::reflexive_only(const Name& binder, std::size_t i) const {
    if (!name_tied(binder, i)) return false;
    for (std::size_t j = 0; j < n_; ++j)
        if (fns_[j].count(binder) && tied_[j * n_ + i]) return false;
    return true;
}

TiedRelation tied_analysis(const NormalForm& nf) { return TiedRelation(nf); }

bool t_compatible_forest(const LabelledForest& f, const BaseForest& T) {
    for (NodeId id : f.all_nodes()) {
        if (!f.is_name(id)) continue;
        const auto& nl = f.name_label(id);
        if (nl.base.empty() || !T.has_node(nl.base))
            throw TypeError("base type '" + nl.base + "' absent from the forest");
        NodeId p = f.node(id).parent;
        while (p != kNoNode && !f.is_name(p)) p = f.node(p).parent;
        if (p != kNoNode) {
            if (!T.less(f.name_label(p).base, nl.base)) return false;
        }
    }
    return true;
}

namespace {

void phi_rec(const std::vector<Restriction>& X, const std::vector<SeqPtr>& A,
             const BaseForest& T, LabelledForest& out, NodeId parent) {
    if (X.empty()) {
        for (const auto& a : A) out.add_seq_node(parent, a);
        return;
    }
    for (const auto& r : X) {
        if (!r.type) throw TypeError("phi: restriction '" + r.name.ident + "' unannotated");
        if (!T.has_node(r.type->base))
            throw TypeError("phi: base type '" + r.type->base + "' absent from the forest");
    }

    NormalForm level;
    level.restrictions = X;
    level.actives = A;
    TiedRelation tied(level);

    // min_T(X): types with no strictly smaller base among X
    std::vector<std::size_t> min_idx;
    for (std::size_t i = 0; i < X.size(); ++i) {
        bool minimal = true;
        for (std::size_t j = 0; j < X.size(); ++j) {
            if (T.less(X[j].type->base, X[i].type->base)) { minimal = false; break; }
        }
        if (minimal) min_idx.push_back(i);
    }
    std::vector<char> is_min(X.size(), 0);
    for (auto i : min_idx) is_min[i] = 1;

    std::vector<char> in_some_Ix(A.size(), 0);
    std::vector<char> in_some_Yx(X.size(), 0);

    for (auto mi : min_idx) {
        const auto& x = X[mi];
        std::vector<std::size_t> I_x;
        for (std::size_t i = 0; i < A.size(); ++i)
            if (tied.name_tied(x.name, i)) {
                I_x.push_back(i);
                in_some_Ix[i] = 1;
            }
        // Y_x: restrictions free in some A_i (i in I_x), minus min_T(X)
        std::vector<Restriction> Y_x;
        for (std::size_t k = 0; k < X.size(); ++k) {
            if (is_min[k]) continue;
            bool mentioned = false;
            for (auto i : I_x)
                if (tied.fn_of(i).count(X[k].name)) { mentioned = true; break; }
            if (mentioned) {
                Y_x.push_back(X[k]);
                in_some_Yx[k] = 1;
            }
        }
        std::vector<SeqPtr> A_x;
        for (auto i : I_x) A_x.push_back(A[i]);
        NodeId node = out.add_name_node(parent, x.name, x.type->base, x.type);
        phi_rec(Y_x, A_x, T, out, node);
    }

    // residue: Z = X minus minimals and every Y_x; R = I minus every I_x
    std::vector<Restriction> Z;
    for (std::size_t k = 0; k < X.size(); ++k)
        if (!is_min[k] && !in_some_Yx[k]) Z.push_back(X[k]);
    std::vector<SeqPtr> R;
    for (std::size_t i = 0; i < A.size(); ++i)
        if (!in_some_Ix[i]) R.push_back(A[i]);
    if (!Z.empty() || !R.empty()) phi_rec(Z, R, T, out, parent);
}

} // namespace

LabelledForest phi(const NormalForm& nf, const BaseForest& T) {
    LabelledForest out;
    if (nf.is_nil()) return out;
    phi_rec(nf.restrictions, nf.actives, T, out, kNoNode);
    return out;
}

Verdict t_compatible_term(const Term& t, const BaseForest& T) {
    NormalForm nf = normalize(t);
    if (nf.is_nil()) return Verdict::True;
    LabelledForest f = phi(nf, T);
    if (!t_compatible_forest(f, T)) return Verdict::False;
    try {
        check_reconstruct_conditions(f);
    } catch (const ReconstructError&) {
        return Verdict::False;
    }
    // label multisets must match the normal form exactly
    std::multiset<std::uint64_t> forest_names, nf_names;
    std::multiset<std::string> forest_leaves, nf_leaves;
    for (NodeId id : f.all_nodes()) {
        if (f.is_name(id)) forest_names.insert(f.name_label(id).name.uid);
        else forest_leaves.insert(rigid_seq_key(*f.seq_label(id)));
    }
    for (const auto& r : nf.restrictions) nf_names.insert(r.name.uid);
    for (const auto& a : nf.actives) nf_leaves.insert(rigid_seq_key(*a));
    if (forest_names != nf_names || forest_leaves != nf_leaves) return Verdict::False;
    try {
        if (!congruent(reconstruct(f), to_term(nf))) return Verdict::False;
    } catch (const SizeBoundExceeded&) {
        return Verdict::Unknown;
    }
    return Verdict::True;
}

namespace {

Verdict shaped_nf(const NormalForm& nf, const BaseForest& T);

Verdict shaped_seq(const SeqTerm& s, const BaseForest& T) {
    Verdict v = Verdict::True;
    for (const auto& b : s.branches) {
        Verdict c = shaped_nf(b.cont, T);
        if (c == Verdict::False) return Verdict::False;
        if (c == Verdict::Unknown) v = Verdict::Unknown;
    }
    return v;
}

Verdict shaped_nf(const NormalForm& nf, const BaseForest& T) {
    Verdict v = t_compatible_term(to_term(nf), T);
    if (v == Verdict::False) return Verdict::False;
    for (const auto& a : nf.actives) {
        Verdict c = shaped_seq(*a, T);
        if (c == Verdict::False) return Verdict::False;
        if (c == Verdict::Unknown) v = Verdict::Unknown;
    }
    return v;
}

} // namespace

Verdict t_shaped(const Term& t, const BaseForest& T) {
    return shaped_nf(normalize(t), T);
}

std::size_t depth_bound(const BaseForest& T) { return T.height(); }

} // namespace pihier
