#include "pihier/semantics.hpp"

#include <algorithm>
#include <deque>
#include <future>
#include <sstream>

#include "pihier/hierarchy.hpp"

namespace pihier {

std::string Redex::describe() const {
    std::ostringstream os;
    if (kind == Kind::TauStep) {
        os << "tau@" << index << "." << branch;
    } else {
        os << "sync(" << channel.ident << ")@" << sender << "." << sender_branch << "->"
           << receiver << "." << receiver_branch;
    }
    return os.str();
}

std::vector<Redex> redexes(const NormalForm& p) {
    std::vector<Redex> out;
    for (std::size_t i = 0; i < p.actives.size(); ++i) {
        const auto& bi = p.actives[i]->branches;
        for (std::size_t b = 0; b < bi.size(); ++b) {
            if (bi[b].prefix.kind == PrefixKind::Tau) {
                Redex r;
                r.kind = Redex::Kind::TauStep;
                r.index = i;
                r.branch = b;
                out.push_back(r);
            }
        }
    }
    for (std::size_t i = 0; i < p.actives.size(); ++i) {
        const auto& bi = p.actives[i]->branches;
        for (std::size_t bs = 0; bs < bi.size(); ++bs) {
            if (bi[bs].prefix.kind != PrefixKind::Output) continue;
            for (std::size_t j = 0; j < p.actives.size(); ++j) {
                // one choice offers a single branch; a replicated term can
                // synchronise with its own unfolded copy
                if (i == j && !p.actives[i]->replicated) continue;
                const auto& bj = p.actives[j]->branches;
                for (std::size_t br = 0; br < bj.size(); ++br) {
                    if (bj[br].prefix.kind != PrefixKind::Input) continue;
                    if (!(bj[br].prefix.channel == bi[bs].prefix.channel)) continue;
                    Redex r;
                    r.kind = Redex::Kind::Sync;
                    r.sender = i;
                    r.sender_branch = bs;
                    r.receiver = j;
                    r.receiver_branch = br;
                    r.channel = bi[bs].prefix.channel;
                    out.push_back(r);
                }
            }
        }
    }
    return out;
}

namespace {

struct StaleRedex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void validate(const NormalForm& p, const Redex& r) {
    auto check = [&](std::size_t idx, std::size_t br, PrefixKind k) {
        if (idx >= p.actives.size() || br >= p.actives[idx]->branches.size() ||
            p.actives[idx]->branches[br].prefix.kind != k)
            throw StaleRedex("stale redex " + r.describe());
    };
    if (r.kind == Redex::Kind::TauStep) {
        check(r.index, r.branch, PrefixKind::Tau);
    } else {
        check(r.sender, r.sender_branch, PrefixKind::Output);
        check(r.receiver, r.receiver_branch, PrefixKind::Input);
        if (!(p.actives[r.sender]->branches[r.sender_branch].prefix.channel ==
              p.actives[r.receiver]->branches[r.receiver_branch].prefix.channel))
            throw StaleRedex("stale redex " + r.describe());
    }
}

} // namespace

NormalForm reduce(const NormalForm& p, const Redex& r) {
    validate(p, r);

    std::vector<Term> actives;
    auto keep_others = [&](std::initializer_list<std::size_t> consumed) {
        for (std::size_t i = 0; i < p.actives.size(); ++i) {
            bool gone = false;
            for (auto c : consumed)
                if (c == i && !p.actives[i]->replicated) gone = true;
            if (!gone) actives.push_back(seq_to_term(*p.actives[i]));
        }
    };

    if (r.kind == Redex::Kind::TauStep) {
        keep_others({r.index});
        actives.push_back(to_term(p.actives[r.index]->branches[r.branch].cont));
    } else {
        keep_others({r.sender, r.receiver});
        const auto& sb = p.actives[r.sender]->branches[r.sender_branch];
        const auto& rb = p.actives[r.receiver]->branches[r.receiver_branch];
        actives.push_back(to_term(sb.cont));
        Term rc = to_term(rb.cont);
        rc = substitute(rc, rb.prefix.object, sb.prefix.object);
        actives.push_back(rc);
    }

    Term body;
    if (actives.empty()) {
        body = mk_nil();
    } else {
        body = actives.back();
        for (std::size_t i = actives.size() - 1; i-- > 0;) body = mk_par(actives[i], body);
    }
    for (std::size_t i = p.restrictions.size(); i-- > 0;)
        body = mk_restrict(p.restrictions[i].name, p.restrictions[i].type, body);

    // replicated participants persist: their copies reuse binder uids, so
    // the uniqueness pass freshens the copies and keeps !M stable
    return normalize(ensure_name_uniq(body));
}

ReachGraph reach(const Term& t, const ReachOptions& opts) {
    ReachGraph g;
    NormalForm nf0 = normalize(ensure_name_uniq(t));
    g.initial = canonical(nf0);
    g.states.emplace(g.initial, nf0);

    std::deque<CanonicalKey> frontier{g.initial};
    while (!frontier.empty()) {
        // expand one BFS layer; parallel expansion merges deterministically
        std::vector<CanonicalKey> layer(frontier.begin(), frontier.end());
        frontier.clear();

        struct Expansion {
            CanonicalKey from;
            std::vector<std::pair<std::string, NormalForm>> succ;
            bool skipped = false;
        };
        auto expand = [&](const CanonicalKey& key) {
            Expansion e;
            e.from = key;
            const NormalForm& nf = g.states.at(key);
            if (opts.max_size != 0 && nf.restrictions.size() > opts.max_size) {
                e.skipped = true;
                return e;
            }
            for (const auto& r : redexes(nf))
                e.succ.emplace_back(r.describe(), reduce(nf, r));
            return e;
        };

        std::vector<Expansion> results;
        results.reserve(layer.size());
        if (opts.workers > 1 && layer.size() > 1) {
            std::vector<std::future<Expansion>> futs;
            futs.reserve(layer.size());
            for (const auto& key : layer)
                futs.push_back(std::async(std::launch::async, expand, std::cref(key)));
            for (auto& f : futs) results.push_back(f.get());
        } else {
            for (const auto& key : layer) results.push_back(expand(key));
        }

        for (const auto& e : results) {
            if (e.skipped) {
                g.truncated = true;
                continue;
            }
            for (const auto& [desc, succ] : e.succ) {
                CanonicalKey key;
                try {
                    key = canonical(succ);
                } catch (const SizeBoundExceeded&) {
                    g.truncated = true;
                    continue;
                }
                auto it = g.states.find(key);
                if (it == g.states.end()) {
                    if (g.states.size() >= opts.max_states) {
                        g.truncated = true;
                        continue;
                    }
                    g.states.emplace(key, succ);
                    frontier.push_back(key);
                }
                g.edges.push_back(ReachEdge{e.from, desc, key});
            }
        }
    }
    return g;
}

namespace {

void der_rec(const Term& t, std::vector<SeqPtr>& out, std::set<std::string>& seen) {
    auto add = [&](const SeqPtr& s) {
        if (seen.insert(rigid_seq_key(*s)).second) out.push_back(s);
    };
    switch (t->kind) {
    case TermKind::Nil:
        return;
    case TermKind::Restrict:
        der_rec(t->body, out, seen);
        return;
    case TermKind::Par:
        der_rec(t->left, out, seen);
        der_rec(t->right, out, seen);
        return;
    case TermKind::Choice: {
        NormalForm nf = normalize(t);
        add(nf.actives.at(0));
        for (const auto& b : t->branches) {
            if (t->branches.size() > 1) {
                NormalForm single = normalize(mk_choice({b}));
                add(single.actives.at(0));
            }
            der_rec(b.cont, out, seen);
        }
        return;
    }
    case TermKind::Repl: {
        NormalForm nf = normalize(t);
        add(nf.actives.at(0));
        der_rec(t->inner, out, seen);
        return;
    }
    }
}

} // namespace

std::vector<SeqPtr> derivatives(const Term& t) {
    std::vector<SeqPtr> out;
    std::set<std::string> seen;
    der_rec(t, out, seen);
    return out;
}

namespace {

// simultaneous renaming of free names on a term
Term rename_frees(Term t, const std::map<Name, Name>& sigma) {
    // two-phase to keep the substitution simultaneous
    std::map<Name, Name> temps;
    for (const auto& [from, to] : sigma) {
        Name tmp = fresh_name(from.ident + "#tmp");
        temps.emplace(from, tmp);
        t = substitute(t, from, tmp);
    }
    for (const auto& [from, to] : sigma) t = substitute(t, temps.at(from), to);
    return t;
}

std::optional<ChanType> lookup_type(const std::map<Name, ChanType>& types, const Name& n) {
    auto it = types.find(n);
    if (it == types.end()) return std::nullopt;
    return it->second;
}

// name -> declared type, walking annotations and input payloads
void collect_types(const Term& t, std::map<Name, ChanType>& types) {
    switch (t->kind) {
    case TermKind::Nil:
        return;
    case TermKind::Restrict:
        if (t->annot) types.emplace(t->binder, *t->annot);
        collect_types(t->body, types);
        return;
    case TermKind::Par:
        collect_types(t->left, types);
        collect_types(t->right, types);
        return;
    case TermKind::Choice:
        for (const auto& b : t->branches) {
            if (b.prefix.kind == PrefixKind::Input) {
                auto ct = lookup_type(types, b.prefix.channel);
                if (ct && ct->payload) types.emplace(b.prefix.object, *ct->payload);
            }
            collect_types(b.cont, types);
        }
        return;
    case TermKind::Repl:
        collect_types(t->inner, types);
        return;
    }
}

} // namespace

std::string chi_ident(const BaseTypeId& base) { return "chi_" + base; }

std::map<Name, ChanType> name_types(const Term& t, const TypeEnv* env) {
    std::map<Name, ChanType> types;
    if (env)
        for (const auto& [n, ty] : env->assignments()) types.emplace(n, ty);
    collect_types(t, types);
    return types;
}

std::vector<SeqPtr> deriv_closure(const Term& t, const BaseForest& T, const TypeEnv* env) {
    std::map<Name, ChanType> types;
    if (env)
        for (const auto& [n, ty] : env->assignments()) types.emplace(n, ty);
    collect_types(t, types);

    std::map<BaseTypeId, Name> chi;
    for (const auto& b : T.nodes()) chi.emplace(b, fresh_name(chi_ident(b)));

    std::set<Name> outer_frees = free_names(t);

    std::vector<SeqPtr> out;
    std::set<std::string> seen;
    auto add_instance = [&](const SeqPtr& d, const std::map<Name, Name>& sigma) {
        Term inst = rename_frees(seq_to_term(*d), sigma);
        NormalForm nf = normalize(inst);
        if (nf.actives.size() != 1) return; // cannot happen for a sequential term
        const SeqPtr& s = nf.actives[0];
        std::string key = canonical(seq_to_term(*s));
        if (seen.insert(key).second) out.push_back(s);
    };

    for (const auto& d : derivatives(t)) {
        std::set<Name> dfree = free_names(*d);
        std::vector<Name> fns(dfree.begin(), dfree.end());
        // type-respecting instantiation: each free name goes to the chi name
        // of its own base type (free names of t stay put)
        {
            std::map<Name, Name> sigma;
            bool ok = true;
            for (const auto& x : fns) {
                if (outer_frees.count(x)) continue;
                auto ty = lookup_type(types, x);
                if (!ty || !T.has_node(ty->base)) { ok = false; break; }
                sigma.emplace(x, chi.at(ty->base));
            }
            if (ok) {
                add_instance(d, sigma);
                continue;
            }
        }
        // untyped fallback: every substitution over X_T and fn(t)
        std::vector<Name> images;
        for (const auto& [b, n] : chi) images.push_back(n);
        for (const auto& n : outer_frees) images.push_back(n);
        std::vector<std::size_t> sel(fns.size(), 0);
        while (true) {
            std::map<Name, Name> sigma;
            for (std::size_t i = 0; i < fns.size(); ++i) sigma.emplace(fns[i], images[sel[i]]);
            add_instance(d, sigma);
            std::size_t pos = 0;
            while (pos < fns.size()) {
                if (++sel[pos] < images.size()) break;
                sel[pos] = 0;
                ++pos;
            }
            if (pos == fns.size() || fns.empty()) break;
        }
    }
    return out;
}

Term chi_rename(const Term& t, const BaseForest& T) {
    if (t_compatible_term(t, T) != Verdict::True)
        throw TypeError("chi_rename: term is not T-compatible");
    std::function<Term(const Term&)> walk = [&](const Term& u) -> Term {
        switch (u->kind) {
        case TermKind::Nil:
            return u;
        case TermKind::Restrict: {
            if (!u->annot)
                throw TypeError("chi_rename: restriction '" + u->binder.ident + "' unannotated");
            Name chi = fresh_name(chi_ident(u->annot->base));
            Term body = substitute(u->body, u->binder, chi);
            return mk_restrict(chi, u->annot, walk(body));
        }
        case TermKind::Par:
            return mk_par(walk(u->left), walk(u->right));
        case TermKind::Choice: {
            std::vector<Branch> bs;
            for (const auto& b : u->branches) bs.push_back(Branch{b.prefix, walk(b.cont)});
            return mk_choice(std::move(bs));
        }
        case TermKind::Repl:
            return mk_repl(walk(u->inner));
        }
        return u;
    };
    return walk(t);
}

} // namespace pihier
