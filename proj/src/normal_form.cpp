#include "pihier/normal_form.hpp"

namespace pihier {

SeqPtr mk_seq(bool replicated, std::vector<NfBranch> branches) {
    if (branches.empty()) throw std::invalid_argument("sequential term needs a branch");
    SeqTerm s;
    s.replicated = replicated;
    s.branches = std::move(branches);
    return std::make_shared<const SeqTerm>(std::move(s));
}

namespace {

NormalForm nf_rec(const Term& t) {
    switch (t->kind) {
    case TermKind::Nil:
        return {};
    case TermKind::Restrict: {
        NormalForm inner = nf_rec(t->body);
        if (inner.actives.empty()) return {}; // nu x.0 == 0
        NormalForm out;
        out.restrictions.push_back(Restriction{t->binder, t->annot});
        out.restrictions.insert(out.restrictions.end(), inner.restrictions.begin(),
                                inner.restrictions.end());
        out.actives = std::move(inner.actives);
        return out;
    }
    case TermKind::Par: {
        NormalForm l = nf_rec(t->left);
        NormalForm r = nf_rec(t->right);
        if (l.actives.empty()) return r;
        if (r.actives.empty()) return l;
        NormalForm out;
        out.restrictions = std::move(l.restrictions);
        out.restrictions.insert(out.restrictions.end(), r.restrictions.begin(),
                                r.restrictions.end());
        out.actives = std::move(l.actives);
        out.actives.insert(out.actives.end(), r.actives.begin(), r.actives.end());
        return out;
    }
    case TermKind::Choice: {
        std::vector<NfBranch> bs;
        bs.reserve(t->branches.size());
        for (const auto& b : t->branches) bs.push_back(NfBranch{b.prefix, nf_rec(b.cont)});
        NormalForm out;
        out.actives.push_back(mk_seq(false, std::move(bs)));
        return out;
    }
    case TermKind::Repl: {
        std::vector<NfBranch> bs;
        bs.reserve(t->inner->branches.size());
        for (const auto& b : t->inner->branches)
            bs.push_back(NfBranch{b.prefix, nf_rec(b.cont)});
        NormalForm out;
        out.actives.push_back(mk_seq(true, std::move(bs)));
        return out;
    }
    }
    return {};
}

} // namespace

NormalForm normalize(const Term& t) {
    Term u = satisfies_name_uniq(t) ? t : ensure_name_uniq(t);
    return nf_rec(u);
}

Term seq_to_term(const SeqTerm& s) {
    std::vector<Branch> bs;
    bs.reserve(s.branches.size());
    for (const auto& b : s.branches) bs.push_back(Branch{b.prefix, to_term(b.cont)});
    Term choice = mk_choice(std::move(bs));
    return s.replicated ? mk_repl(choice) : choice;
}

Term to_term(const NormalForm& nf) {
    if (nf.actives.empty()) return mk_nil();
    Term body = seq_to_term(*nf.actives.back());
    for (std::size_t i = nf.actives.size() - 1; i-- > 0;)
        body = mk_par(seq_to_term(*nf.actives[i]), body);
    for (std::size_t i = nf.restrictions.size(); i-- > 0;)
        body = mk_restrict(nf.restrictions[i].name, nf.restrictions[i].type, body);
    return body;
}

namespace {

void frees_seq(const SeqTerm& s, std::set<Name>& out);

void frees_nf(const NormalForm& nf, std::set<Name>& out) {
    std::set<Name> inner;
    for (const auto& a : nf.actives) frees_seq(*a, inner);
    for (const auto& r : nf.restrictions) inner.erase(r.name);
    out.insert(inner.begin(), inner.end());
}

void frees_seq(const SeqTerm& s, std::set<Name>& out) {
    for (const auto& b : s.branches) {
        std::set<Name> inner;
        frees_nf(b.cont, inner);
        switch (b.prefix.kind) {
        case PrefixKind::Input:
            out.insert(b.prefix.channel);
            inner.erase(b.prefix.object);
            break;
        case PrefixKind::Output:
            out.insert(b.prefix.channel);
            out.insert(b.prefix.object);
            break;
        case PrefixKind::Tau:
            break;
        }
        out.insert(inner.begin(), inner.end());
    }
}

} // namespace

std::set<Name> free_names(const NormalForm& nf) {
    std::set<Name> out;
    frees_nf(nf, out);
    return out;
}

std::set<Name> free_names(const SeqTerm& s) {
    std::set<Name> out;
    frees_seq(s, out);
    return out;
}

} // namespace pihier
