#include "pihier/term.hpp"

#include <map>
#include <stdexcept>

namespace pihier {

namespace {
Term make(TermNode n) { return std::make_shared<const TermNode>(std::move(n)); }
} // namespace

Term mk_nil() {
    static const Term nil = make(TermNode{});
    return nil;
}

Term mk_restrict(Name binder, std::optional<ChanType> annot, Term body) {
    TermNode n;
    n.kind = TermKind::Restrict;
    n.binder = std::move(binder);
    n.annot = std::move(annot);
    n.body = std::move(body);
    return make(std::move(n));
}

Term mk_par(Term left, Term right) {
    TermNode n;
    n.kind = TermKind::Par;
    n.left = std::move(left);
    n.right = std::move(right);
    return make(std::move(n));
}

Term mk_choice(std::vector<Branch> branches) {
    if (branches.empty()) return mk_nil();
    TermNode n;
    n.kind = TermKind::Choice;
    n.branches = std::move(branches);
    return make(std::move(n));
}

Term mk_prefix(Prefix p, Term cont) {
    return mk_choice({Branch{std::move(p), std::move(cont)}});
}

Term mk_repl(Term choice) {
    if (!choice) throw std::invalid_argument("mk_repl: null");
    if (choice->kind == TermKind::Nil) return mk_nil(); // !0 == 0
    if (choice->kind != TermKind::Choice)
        throw std::invalid_argument("replication applies to choices only");
    TermNode n;
    n.kind = TermKind::Repl;
    n.inner = std::move(choice);
    return make(std::move(n));
}

namespace {

void name_sets_rec(const Term& t, bool active, NameSets& out) {
    switch (t->kind) {
    case TermKind::Nil: return;
    case TermKind::Restrict: {
        out.bound.insert(t->binder);
        if (active) out.active_restrictions.insert(t->binder);
        NameSets inner;
        name_sets_rec(t->body, active, inner);
        inner.free.erase(t->binder);
        out.free.insert(inner.free.begin(), inner.free.end());
        out.bound.insert(inner.bound.begin(), inner.bound.end());
        out.active_restrictions.insert(inner.active_restrictions.begin(),
                                       inner.active_restrictions.end());
        return;
    }
    case TermKind::Par:
        name_sets_rec(t->left, active, out);
        name_sets_rec(t->right, active, out);
        return;
    case TermKind::Choice:
        for (const auto& b : t->branches) {
            NameSets inner;
            name_sets_rec(b.cont, false, inner);
            switch (b.prefix.kind) {
            case PrefixKind::Input:
                out.free.insert(b.prefix.channel);
                out.bound.insert(b.prefix.object);
                inner.free.erase(b.prefix.object);
                break;
            case PrefixKind::Output:
                out.free.insert(b.prefix.channel);
                out.free.insert(b.prefix.object);
                break;
            case PrefixKind::Tau:
                break;
            }
            out.free.insert(inner.free.begin(), inner.free.end());
            out.bound.insert(inner.bound.begin(), inner.bound.end());
        }
        return;
    case TermKind::Repl:
        name_sets_rec(t->inner, active, out);
        return;
    }
}

} // namespace

NameSets name_sets(const Term& t) {
    NameSets out;
    name_sets_rec(t, true, out);
    return out;
}

std::set<Name> free_names(const Term& t) { return name_sets(t).free; }

namespace {

Term subst_rec(const Term& t, const Name& from, const Name& to) {
    switch (t->kind) {
    case TermKind::Nil: return t;
    case TermKind::Restrict: {
        if (t->binder == from) return t; // shadowed (cannot happen under name uniqueness)
        if (t->binder == to) {
            if (free_names(t->body).count(from))
                throw std::runtime_error("substitute: capture by restriction '" + to.ident + "'");
            return t;
        }
        Term body = subst_rec(t->body, from, to);
        if (body == t->body) return t;
        return mk_restrict(t->binder, t->annot, body);
    }
    case TermKind::Par: {
        Term l = subst_rec(t->left, from, to);
        Term r = subst_rec(t->right, from, to);
        if (l == t->left && r == t->right) return t;
        return mk_par(l, r);
    }
    case TermKind::Choice: {
        std::vector<Branch> out;
        out.reserve(t->branches.size());
        bool changed = false;
        for (const auto& b : t->branches) {
            Prefix p = b.prefix;
            Term cont = b.cont;
            switch (p.kind) {
            case PrefixKind::Input:
                if (p.channel == from) { p.channel = to; }
                if (b.prefix.object == from) {
                    // binder shadows; leave continuation alone
                } else if (b.prefix.object == to) {
                    if (free_names(cont).count(from))
                        throw std::runtime_error("substitute: capture by input binder '" +
                                                 to.ident + "'");
                } else {
                    cont = subst_rec(cont, from, to);
                }
                break;
            case PrefixKind::Output:
                if (p.channel == from) p.channel = to;
                if (p.object == from) p.object = to;
                cont = subst_rec(cont, from, to);
                break;
            case PrefixKind::Tau:
                cont = subst_rec(cont, from, to);
                break;
            }
            changed = changed || cont != b.cont || p.channel != b.prefix.channel ||
                      p.object != b.prefix.object;
            out.push_back(Branch{p, cont});
        }
        if (!changed) return t;
        return mk_choice(std::move(out));
    }
    case TermKind::Repl: {
        Term inner = subst_rec(t->inner, from, to);
        if (inner == t->inner) return t;
        return mk_repl(inner);
    }
    }
    return t;
}

} // namespace

Term substitute(const Term& t, const Name& from, const Name& to) {
    if (from == to) return t;
    return subst_rec(t, from, to);
}

namespace {

// Renaming map threaded through binders; every binder gets a fresh uid when
// it collides with anything seen before (identifier kept).
struct Uniq {
    std::set<std::uint64_t> seen;

    Term run(const Term& t, std::map<Name, Name>& env) {
        switch (t->kind) {
        case TermKind::Nil: return t;
        case TermKind::Restrict: {
            Name b = freshen(t->binder);
            auto saved = set(env, t->binder, b);
            Term body = run(t->body, env);
            restore(env, t->binder, saved);
            return mk_restrict(b, t->annot, body);
        }
        case TermKind::Par:
            return mk_par(run(t->left, env), run(t->right, env));
        case TermKind::Choice: {
            std::vector<Branch> out;
            out.reserve(t->branches.size());
            for (const auto& br : t->branches) {
                Prefix p = br.prefix;
                if (p.kind != PrefixKind::Tau) p.channel = rename(env, p.channel);
                if (p.kind == PrefixKind::Output) p.object = rename(env, p.object);
                if (p.kind == PrefixKind::Input) {
                    Name b = freshen(p.object);
                    auto saved = set(env, p.object, b);
                    Term cont = run(br.cont, env);
                    restore(env, p.object, saved);
                    Prefix np = p;
                    np.object = b;
                    out.push_back(Branch{np, cont});
                } else {
                    out.push_back(Branch{p, run(br.cont, env)});
                }
            }
            return mk_choice(std::move(out));
        }
        case TermKind::Repl:
            return mk_repl(run(t->inner, env));
        }
        return t;
    }

    Name freshen(const Name& n) {
        if (seen.insert(n.uid).second) return n; // first use keeps its uid
        Name f = fresh_name(n.ident);
        seen.insert(f.uid);
        return f;
    }

    Name rename(const std::map<Name, Name>& env, const Name& n) {
        auto it = env.find(n);
        if (it != env.end()) return it->second;
        seen.insert(n.uid); // free name: reserve its uid
        return n;
    }

    std::optional<Name> set(std::map<Name, Name>& env, const Name& k, const Name& v) {
        std::optional<Name> old;
        auto it = env.find(k);
        if (it != env.end()) old = it->second;
        env[k] = v;
        return old;
    }

    void restore(std::map<Name, Name>& env, const Name& k, const std::optional<Name>& old) {
        if (old) env[k] = *old;
        else env.erase(k);
    }
};

} // namespace

Term ensure_name_uniq(const Term& t) {
    // Two passes: reserve free names first so binders never steal their uids.
    Uniq u;
    for (const auto& n : free_names(t)) u.seen.insert(n.uid);
    std::map<Name, Name> env;
    return u.run(t, env);
}

bool satisfies_name_uniq(const Term& t) {
    NameSets ns = name_sets(t);
    for (const auto& b : ns.bound)
        if (ns.free.count(b)) return false;
    // each name bound at most once: count binder occurrences
    std::size_t binders = 0;
    std::set<Name> distinct;
    std::vector<Term> stack{t};
    while (!stack.empty()) {
        Term cur = stack.back();
        stack.pop_back();
        switch (cur->kind) {
        case TermKind::Nil: break;
        case TermKind::Restrict:
            ++binders;
            distinct.insert(cur->binder);
            stack.push_back(cur->body);
            break;
        case TermKind::Par:
            stack.push_back(cur->left);
            stack.push_back(cur->right);
            break;
        case TermKind::Choice:
            for (const auto& br : cur->branches) {
                if (br.prefix.kind == PrefixKind::Input) {
                    ++binders;
                    distinct.insert(br.prefix.object);
                }
                stack.push_back(br.cont);
            }
            break;
        case TermKind::Repl:
            stack.push_back(cur->inner);
            break;
        }
    }
    return binders == distinct.size();
}

std::vector<std::pair<Name, std::optional<ChanType>>> all_restrictions(const Term& t) {
    std::vector<std::pair<Name, std::optional<ChanType>>> out;
    std::vector<Term> stack{t};
    while (!stack.empty()) {
        Term cur = stack.back();
        stack.pop_back();
        switch (cur->kind) {
        case TermKind::Nil: break;
        case TermKind::Restrict:
            out.emplace_back(cur->binder, cur->annot);
            stack.push_back(cur->body);
            break;
        case TermKind::Par:
            stack.push_back(cur->left);
            stack.push_back(cur->right);
            break;
        case TermKind::Choice:
            for (const auto& br : cur->branches) stack.push_back(br.cont);
            break;
        case TermKind::Repl:
            stack.push_back(cur->inner);
            break;
        }
    }
    return out;
}

namespace {

bool alpha_rec(const Term& a, const Term& b, std::map<Name, Name>& ab) {
    if (a->kind != b->kind) return false;
    auto names_eq = [&](const Name& x, const Name& y) {
        auto it = ab.find(x);
        if (it != ab.end()) return it->second == y;
        return x == y;
    };
    switch (a->kind) {
    case TermKind::Nil: return true;
    case TermKind::Restrict: {
        if (a->annot.has_value() != b->annot.has_value()) return false;
        if (a->annot && !(*a->annot == *b->annot)) return false;
        auto saved = ab.find(a->binder) != ab.end() ? std::optional<Name>(ab[a->binder])
                                                    : std::nullopt;
        ab[a->binder] = b->binder;
        bool ok = alpha_rec(a->body, b->body, ab);
        if (saved) ab[a->binder] = *saved;
        else ab.erase(a->binder);
        return ok;
    }
    case TermKind::Par:
        return alpha_rec(a->left, b->left, ab) && alpha_rec(a->right, b->right, ab);
    case TermKind::Choice: {
        if (a->branches.size() != b->branches.size()) return false;
        for (std::size_t i = 0; i < a->branches.size(); ++i) {
            const auto& ba = a->branches[i];
            const auto& bb = b->branches[i];
            if (ba.prefix.kind != bb.prefix.kind) return false;
            switch (ba.prefix.kind) {
            case PrefixKind::Tau:
                if (!alpha_rec(ba.cont, bb.cont, ab)) return false;
                break;
            case PrefixKind::Output:
                if (!names_eq(ba.prefix.channel, bb.prefix.channel)) return false;
                if (!names_eq(ba.prefix.object, bb.prefix.object)) return false;
                if (!alpha_rec(ba.cont, bb.cont, ab)) return false;
                break;
            case PrefixKind::Input: {
                if (!names_eq(ba.prefix.channel, bb.prefix.channel)) return false;
                auto saved = ab.find(ba.prefix.object) != ab.end()
                                 ? std::optional<Name>(ab[ba.prefix.object])
                                 : std::nullopt;
                ab[ba.prefix.object] = bb.prefix.object;
                bool ok = alpha_rec(ba.cont, bb.cont, ab);
                if (saved) ab[ba.prefix.object] = *saved;
                else ab.erase(ba.prefix.object);
                if (!ok) return false;
                break;
            }
            }
        }
        return true;
    }
    case TermKind::Repl:
        return alpha_rec(a->inner, b->inner, ab);
    }
    return false;
}

} // namespace

bool alpha_equal(const Term& a, const Term& b) {
    std::map<Name, Name> ab;
    return alpha_rec(a, b, ab);
}

} // namespace pihier
