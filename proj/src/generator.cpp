#include "pihier/generator.hpp"

#include <algorithm>

#include "pihier/typing.hpp"

namespace pihier {

std::size_t TermGen::pick(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng_() % (hi - lo + 1));
}

namespace {

ChanType random_type(std::mt19937_64& rng, const std::vector<BaseTypeId>& bases,
                     std::size_t depth) {
    BaseTypeId b = bases[rng() % bases.size()];
    if (depth == 0 || rng() % 2 == 0) return ChanType::bare(b);
    return ChanType::chan(b, random_type(rng, bases, depth - 1));
}

} // namespace

Term TermGen::annotated_term(const BaseForest& T, std::size_t max_restr) {
    std::vector<BaseTypeId> bases(T.nodes().begin(), T.nodes().end());
    std::vector<Name> scope;

    // a leaf prefix over the names in scope; `must` is always mentioned
    // (taken by value: scope may reallocate underneath)
    std::function<Term(Name, std::size_t)> leaf = [&](Name must, std::size_t depth) -> Term {
        Name other = scope[pick(0, scope.size() - 1)];
        Term cont = mk_nil();
        if (depth < 2 && pick(0, 3) == 0) {
            Name c2 = scope[pick(0, scope.size() - 1)];
            cont = leaf(c2, depth + 1);
        }
        switch (pick(0, 4)) {
        case 0: return mk_prefix(Prefix::output(must, other), cont);
        case 1: return mk_prefix(Prefix::output(other, must), cont);
        case 2: {
            Name binder = fresh_name("y" + std::to_string(pick(0, 999)));
            return mk_prefix(Prefix::input(must, binder), cont);
        }
        case 3: {
            Term p = mk_prefix(Prefix::output(must, other), cont);
            return mk_repl(p);
        }
        default: {
            Name binder = fresh_name("y" + std::to_string(pick(0, 999)));
            scope.push_back(binder);
            Term inner = leaf(binder, depth + 1);
            scope.pop_back();
            return mk_prefix(Prefix::input(must, binder), inner);
        }
        }
    };

    std::function<Term(std::size_t)> build = [&](std::size_t restr_left) -> Term {
        if (restr_left == 0) {
            std::size_t k = pick(1, 2);
            Term t = leaf(scope[pick(0, scope.size() - 1)], 0);
            for (std::size_t i = 1; i < k; ++i)
                t = mk_par(t, leaf(scope[pick(0, scope.size() - 1)], 0));
            return t;
        }
        Name x = fresh_name("n" + std::to_string(pick(0, 999)));
        ChanType ty = random_type(rng_, bases, 2);
        scope.push_back(x);
        Term use = pick(0, 9) == 0 ? mk_nil() : leaf(x, 0); // occasionally unused
        Term rest = build(restr_left - 1);
        scope.pop_back();
        Term body = use->kind == TermKind::Nil ? rest : mk_par(use, rest);
        // sometimes the restriction guards only part of the term
        if (pick(0, 3) == 0 && !scope.empty())
            return mk_par(mk_restrict(x, ty, body), leaf(scope[pick(0, scope.size() - 1)], 0));
        return mk_restrict(x, ty, body);
    };

    std::size_t n = pick(2, std::max<std::size_t>(2, max_restr));
    Term t = build(n);
    return ensure_name_uniq(t);
}

Term TermGen::closed_term(std::size_t size_budget) {
    std::vector<Name> scope;
    std::size_t budget = size_budget;
    bool allow_tau = true;

    std::function<Term(std::size_t)> gen = [&](std::size_t depth) -> Term {
        if (budget == 0 || depth > 6) return mk_nil();
        std::size_t roll = pick(0, 9);
        if (roll <= 1 && depth > 0) return mk_nil();
        --budget;
        if (scope.empty() || roll <= 3) {
            Name x = fresh_name("a" + std::to_string(pick(0, 99)));
            scope.push_back(x);
            Term body = mk_par(gen(depth + 1), gen(depth + 1));
            scope.pop_back();
            return mk_restrict(x, std::nullopt, body);
        }
        if (roll <= 5) return mk_par(gen(depth + 1), gen(depth + 1));
        Name chan = scope[pick(0, scope.size() - 1)];
        std::size_t pr = pick(0, allow_tau ? 2 : 1);
        Term result;
        if (pr == 0) {
            Name obj = scope[pick(0, scope.size() - 1)];
            result = mk_prefix(Prefix::output(chan, obj), gen(depth + 1));
        } else if (pr == 1) {
            Name binder = fresh_name("y" + std::to_string(pick(0, 99)));
            scope.push_back(binder);
            Term cont = gen(depth + 1);
            scope.pop_back();
            result = mk_prefix(Prefix::input(chan, binder), cont);
        } else {
            result = mk_prefix(Prefix::tau(), gen(depth + 1));
        }
        return pick(0, 4) == 0 ? mk_repl(result) : result;
    };
    Term t = gen(0);
    return ensure_name_uniq(t);
}

Term TermGen::typable_term(std::size_t size_budget, std::size_t attempts, bool tau_free) {
    for (std::size_t k = 0; k < attempts; ++k) {
        Term t = closed_term(size_budget);
        if (tau_free) {
            bool has_tau = false;
            std::function<void(const Term&)> scan = [&](const Term& u) {
                switch (u->kind) {
                case TermKind::Nil: return;
                case TermKind::Restrict: scan(u->body); return;
                case TermKind::Par: scan(u->left); scan(u->right); return;
                case TermKind::Choice:
                    for (const auto& b : u->branches) {
                        if (b.prefix.kind == PrefixKind::Tau) has_tau = true;
                        scan(b.cont);
                    }
                    return;
                case TermKind::Repl: scan(u->inner); return;
                }
            };
            scan(t);
            if (has_tau) continue;
        }
        if (normalize(t).is_nil()) continue;
        InferenceResult r = infer(t);
        if (r.is_typable()) return t;
    }
    // a client/server-like fallback that is always typably hierarchical
    Name s = fresh_name("srv"), c1 = fresh_name("req1"), c2 = fresh_name("req2");
    Name x = fresh_name("x"), d = fresh_name("d");
    Term server = mk_repl(mk_prefix(
        Prefix::input(s, x),
        mk_restrict(d, std::nullopt, mk_prefix(Prefix::output(x, d), mk_nil()))));
    Term t = mk_restrict(
        s, std::nullopt,
        mk_restrict(c1, std::nullopt,
                    mk_restrict(c2, std::nullopt,
                                mk_par(server, mk_par(mk_prefix(Prefix::output(s, c1), mk_nil()),
                                                      mk_prefix(Prefix::output(s, c2), mk_nil()))))));
    return ensure_name_uniq(t);
}

BaseForest TermGen::chain_forest(std::size_t n) {
    std::vector<BaseTypeId> ns;
    for (std::size_t i = 1; i <= n; ++i) ns.push_back("t" + std::to_string(i));
    return BaseForest::chain(ns);
}

Automaton TermGen::automaton(std::size_t max_states, std::size_t max_level,
                             std::size_t max_trans) {
    Automaton a;
    std::size_t nstates = pick(1, max_states);
    std::size_t level = pick(1, max_level);
    a.level = level;
    for (std::size_t i = 0; i < nstates; ++i) a.intern("q" + std::to_string(i));
    a.initial_state = 0;
    std::size_t ntrans = pick(1, max_trans);
    for (std::size_t k = 0; k < ntrans; ++k) {
        ConcreteTransition t;
        t.from = static_cast<StateId>(pick(0, nstates - 1));
        t.to = static_cast<StateId>(pick(0, nstates - 1));
        std::size_t i = pick(1, level);
        std::size_t j = pick(0, i);
        for (std::size_t p = 0; p < i; ++p)
            t.pre.push_back(p < j ? static_cast<StateId>(pick(0, nstates - 1)) : kFreshSlot);
        for (std::size_t p = 0; p < i; ++p)
            t.post.push_back(static_cast<StateId>(pick(0, nstates - 1)));
        a.concrete.push_back(std::move(t));
    }
    return a;
}

} // namespace pihier
