#include "pihier/typing.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

#include "pihier/printer.hpp"

namespace pihier {

namespace {

std::string excerpt(const Term& t) {
    std::string s = print_term(t);
    if (s.size() > 64) s = s.substr(0, 61) + "...";
    return s;
}

struct Checker {
    const BaseForest& T;
    TypecheckResult res;

    void violation(std::string rule, const Term& at, std::string detail) {
        res.violations.push_back(RuleViolation{std::move(rule), excerpt(at), std::move(detail)});
    }

    const ChanType& lookup(const TypeEnv& env, const Name& n, const Term& at) {
        const ChanType* ty = env.find(n);
        if (!ty)
            throw TypeError("name '" + n.ident + "' missing from the environment in " +
                            excerpt(at));
        if (!T.has_node(ty->base))
            throw TypeError("base type '" + ty->base + "' absent from the forest");
        return *ty;
    }

    DerivationNode check_nf(const NormalForm& nf, const TypeEnv& env) {
        DerivationNode node{"Par", excerpt(to_term(nf)), {}};
        TypeEnv inner = env;
        for (const auto& r : nf.restrictions) {
            if (!r.type)
                throw TypeError("restriction '" + r.name.ident + "' lacks an annotation");
            if (!T.has_node(r.type->base))
                throw TypeError("base type '" + r.type->base + "' absent from the forest");
            inner.bind(r.name, *r.type);
        }
        TiedRelation tied(nf);
        for (std::size_t i = 0; i < nf.actives.size(); ++i)
            node.premises.push_back(check_seq(*nf.actives[i], inner));
        // base(Gamma(fn(A_i))) < base(ty_x) for every x in X tied to A_i;
        // Gamma here is the outer environment only
        for (std::size_t i = 0; i < nf.actives.size(); ++i) {
            for (const auto& r : nf.restrictions) {
                if (!tied.name_tied(r.name, i)) continue;
                for (const auto& y : tied.fn_of(i)) {
                    const ChanType* ty = env.find(y);
                    if (!ty) continue;
                    if (!T.less(ty->base, r.type->base)) {
                        violation("Par", seq_to_term(*nf.actives[i]),
                                  "base(" + y.ident + ":" + ty->base + ") < base(" +
                                      r.name.ident + ":" + r.type->base + ") fails");
                    }
                }
            }
        }
        return node;
    }

    DerivationNode check_seq(const SeqTerm& s, const TypeEnv& env) {
        if (s.replicated) {
            DerivationNode node{"Repl", excerpt(seq_to_term(s)), {}};
            node.premises.push_back(check_choice(s, env));
            return node;
        }
        return check_choice(s, env);
    }

    DerivationNode check_choice(const SeqTerm& s, const TypeEnv& env) {
        DerivationNode node{"Choice", excerpt(seq_to_term(s)), {}};
        for (const auto& b : s.branches) node.premises.push_back(check_branch(b, env));
        return node;
    }

    DerivationNode check_branch(const NfBranch& b, const TypeEnv& env) {
        Term at = seq_to_term(SeqTerm{false, {b}});
        switch (b.prefix.kind) {
        case PrefixKind::Tau: {
            DerivationNode node{"Tau", excerpt(at), {}};
            node.premises.push_back(check_nf(b.cont, env));
            return node;
        }
        case PrefixKind::Output: {
            DerivationNode node{"Out", excerpt(at), {}};
            const ChanType& ta = lookup(env, b.prefix.channel, at);
            const ChanType& tb = lookup(env, b.prefix.object, at);
            if (!ta.payload) {
                violation("Out", at, "channel '" + b.prefix.channel.ident + "' has bare type " +
                                         ta.base + " and cannot carry a message");
            } else if (!(*ta.payload == tb)) {
                violation("Out", at, "payload type " + ta.payload->to_string() + " of '" +
                                         b.prefix.channel.ident + "' differs from type " +
                                         tb.to_string() + " of '" + b.prefix.object.ident + "'");
            }
            node.premises.push_back(check_nf(b.cont, env));
            return node;
        }
        case PrefixKind::Input: {
            DerivationNode node{"In", excerpt(at), {}};
            const ChanType& ta = lookup(env, b.prefix.channel, at);
            if (!ta.payload) {
                violation("In", at, "channel '" + b.prefix.channel.ident + "' has bare type " +
                                        ta.base + " and cannot carry a message");
                return node;
            }
            TypeEnv inner = env;
            inner.bind(b.prefix.object, *ta.payload);
            node.premises.push_back(check_nf(b.cont, inner));

            if (T.leq(ta.payload->base, ta.base)) return node; // first disjunct
            TiedRelation tied(b.cont);
            for (std::size_t i = 0; i < b.cont.actives.size(); ++i) {
                if (!tied.migratable(b.prefix.object, i)) continue;
                if (tied.reflexive_only(b.prefix.object, i))
                    res.reflexive_migration_notes.push_back(
                        "migratable via the reflexive reading of tied-to: " +
                        excerpt(seq_to_term(*b.cont.actives[i])) + " in " + excerpt(at));
                for (const auto& y : tied.fn_of(i)) {
                    if (y == b.prefix.channel) continue;
                    const ChanType* ty = env.find(y);
                    if (!ty) continue;
                    if (!T.less(ty->base, ta.base)) {
                        violation("In", at,
                                  "migratable continuation " +
                                      excerpt(seq_to_term(*b.cont.actives[i])) + ": base(" +
                                      y.ident + ":" + ty->base + ") < " + ta.base + " fails (and base(" +
                                      ta.payload->base + ") <= " + ta.base + " fails)");
                    }
                }
            }
            return node;
        }
        }
        return DerivationNode{};
    }
};

} // namespace

TypecheckResult typecheck(const TypingProblem& problem) {
    Checker c{problem.forest, {}};
    for (const auto& x : free_names(problem.term)) {
        if (!problem.env.contains(x))
            throw TypeError("environment does not cover free name '" + x.ident + "'");
    }
    c.res.derivation = c.check_nf(problem.term, problem.env);
    c.res.ok = c.res.violations.empty();
    return c.res;
}

bool p_safe(const TypeEnv& env, const Term& t, const BaseForest& T) {
    auto frees = free_names(t);
    auto restrictions = all_restrictions(t);
    for (const auto& x : frees) {
        const ChanType* tx = env.find(x);
        if (!tx) throw TypeError("p_safe: environment misses '" + x.ident + "'");
        for (const auto& [y, ty] : restrictions) {
            if (!ty) throw TypeError("p_safe: restriction '" + y.ident + "' unannotated");
            if (!T.less(tx->base, ty->base)) return false;
        }
    }
    return true;
}

// ---- constraint generation ------------------------------------------------

namespace {

struct VarStore {
    // union-find across type vars and base vars
    std::vector<TypeVarId> tparent;
    std::vector<BaseVarId> bparent;
    enum class Payload { Unknown, Forbidden, Var };
    struct Shape {
        BaseVarId base = 0;
        Payload pkind = Payload::Unknown;
        TypeVarId payload = 0;
    };
    std::vector<Shape> shapes; // by type var rep at creation time
    std::map<BaseVarId, BaseTypeId> constants;
    std::map<BaseVarId, std::vector<std::string>> base_names; // names sharing the base
    std::optional<std::string> failure;

    TypeVarId fresh_tvar() {
        tparent.push_back(static_cast<TypeVarId>(tparent.size()));
        shapes.push_back(Shape{fresh_bvar(), Payload::Unknown, 0});
        return tparent.back();
    }
    BaseVarId fresh_bvar() {
        bparent.push_back(static_cast<BaseVarId>(bparent.size()));
        return bparent.back();
    }
    TypeVarId tfind(TypeVarId v) {
        while (tparent[v] != v) v = tparent[v] = tparent[tparent[v]];
        return v;
    }
    BaseVarId bfind(BaseVarId v) {
        while (bparent[v] != v) v = bparent[v] = bparent[bparent[v]];
        return v;
    }

    void bunion(BaseVarId a, BaseVarId b, const std::string& why) {
        a = bfind(a);
        b = bfind(b);
        if (a == b) return;
        auto ca = constants.find(a);
        auto cb = constants.find(b);
        if (ca != constants.end() && cb != constants.end() && ca->second != cb->second) {
            if (!failure)
                failure = "base types " + ca->second + " and " + cb->second +
                          " forced equal (" + why + ")";
            return;
        }
        bparent[b] = a;
        if (cb != constants.end()) constants.emplace(a, cb->second);
        auto& na = base_names[a];
        auto& nb = base_names[b];
        na.insert(na.end(), nb.begin(), nb.end());
    }

    bool occurs(TypeVarId target, TypeVarId in, std::size_t guard = 0) {
        if (guard > tparent.size()) return true;
        in = tfind(in);
        if (in == target) return true;
        Shape& s = shapes[in];
        if (s.pkind == Payload::Var) return occurs(target, s.payload, guard + 1);
        return false;
    }

    void tunify(TypeVarId a, TypeVarId b, const std::string& why) {
        a = tfind(a);
        b = tfind(b);
        if (a == b) return;
        Shape sa = shapes[a];
        Shape sb = shapes[b];
        if ((sa.pkind == Payload::Var && occurs(b, sa.payload)) ||
            (sb.pkind == Payload::Var && occurs(a, sb.payload))) {
            if (!failure) failure = "occurs check: recursive channel type (" + why + ")";
            return;
        }
        tparent[b] = a;
        bunion(sa.base, sb.base, why);
        if (sa.pkind == Payload::Unknown) {
            shapes[a].pkind = sb.pkind;
            shapes[a].payload = sb.payload;
        } else if (sb.pkind == Payload::Unknown) {
            // keep sa
        } else if (sa.pkind == Payload::Forbidden && sb.pkind == Payload::Forbidden) {
            // both bare
        } else if (sa.pkind == Payload::Var && sb.pkind == Payload::Var) {
            tunify(sa.payload, sb.payload, why);
        } else {
            if (!failure)
                failure = "bare type used as a channel (" + why + ")";
        }
    }

    // the payload type var of a channel-shaped var
    TypeVarId payload_of(TypeVarId a, const std::string& why) {
        a = tfind(a);
        Shape& s = shapes[a];
        if (s.pkind == Payload::Var) return s.payload;
        if (s.pkind == Payload::Forbidden) {
            if (!failure) failure = "bare type used as a channel (" + why + ")";
            return fresh_tvar();
        }
        TypeVarId p = fresh_tvar();
        shapes[a].pkind = Payload::Var;
        shapes[a].payload = p;
        return p;
    }

    BaseVarId base_of(TypeVarId a) { return bfind(shapes[tfind(a)].base); }

    void bind_annotation(TypeVarId v, const ChanType& ty, const std::string& who) {
        v = tfind(v);
        BaseVarId b = base_of(v);
        auto it = constants.find(b);
        if (it != constants.end() && it->second != ty.base) {
            if (!failure)
                failure = "annotation " + ty.base + " clashes with " + it->second + " for " + who;
            return;
        }
        constants.emplace(b, ty.base);
        if (ty.payload) {
            TypeVarId p = payload_of(v, "annotation of " + who);
            bind_annotation(p, *ty.payload, who);
        } else {
            Shape& s = shapes[v];
            if (s.pkind == VarStore::Payload::Var) {
                if (!failure)
                    failure = "bare annotation on channel '" + who + "'";
            } else {
                s.pkind = Payload::Forbidden;
            }
        }
    }
};

struct Generator {
    VarStore vars;
    std::map<Name, TypeVarId> name_vars;
    std::vector<OrderAtom> atoms;
    std::vector<InDisjunction> disj;

    TypeVarId var_of(const Name& n) {
        auto it = name_vars.find(n);
        if (it != name_vars.end()) return it->second;
        TypeVarId v = vars.fresh_tvar();
        vars.base_names[vars.base_of(v)].push_back(n.ident);
        name_vars.emplace(n, v);
        return v;
    }

    OrderAtom atom(bool strict, const Name& lhs, const Name& rhs, std::string why) {
        OrderAtom a;
        a.strict = strict;
        a.lhs = vars.base_of(var_of(lhs));
        a.rhs = vars.base_of(var_of(rhs));
        a.provenance = std::move(why);
        return a;
    }

    void walk_nf(const NormalForm& nf, const std::set<Name>& scope) {
        for (const auto& r : nf.restrictions) {
            TypeVarId v = var_of(r.name);
            if (r.type) vars.bind_annotation(v, *r.type, r.name.ident);
        }
        std::set<Name> inner = scope;
        for (const auto& r : nf.restrictions) inner.insert(r.name);
        TiedRelation tied(nf);
        for (std::size_t i = 0; i < nf.actives.size(); ++i) {
            for (const auto& r : nf.restrictions) {
                if (!tied.name_tied(r.name, i)) continue;
                for (const auto& y : tied.fn_of(i)) {
                    if (!scope.count(y)) continue;
                    atoms.push_back(atom(true, y, r.name,
                                         "Par: base(" + y.ident + ") < base(" + r.name.ident +
                                             ") since " + r.name.ident + " is tied to " +
                                             excerpt(seq_to_term(*nf.actives[i]))));
                }
            }
            walk_seq(*nf.actives[i], inner);
        }
    }

    void walk_seq(const SeqTerm& s, const std::set<Name>& scope) {
        for (const auto& b : s.branches) {
            switch (b.prefix.kind) {
            case PrefixKind::Tau:
                walk_nf(b.cont, scope);
                break;
            case PrefixKind::Output: {
                TypeVarId pa = vars.payload_of(var_of(b.prefix.channel),
                                               "output on " + b.prefix.channel.ident);
                vars.tunify(pa, var_of(b.prefix.object),
                            "payload of " + b.prefix.channel.ident + " vs " +
                                b.prefix.object.ident);
                walk_nf(b.cont, scope);
                break;
            }
            case PrefixKind::Input: {
                TypeVarId pa = vars.payload_of(var_of(b.prefix.channel),
                                               "input on " + b.prefix.channel.ident);
                vars.tunify(pa, var_of(b.prefix.object),
                            "binder of " + b.prefix.channel.ident + "(" +
                                b.prefix.object.ident + ")");
                std::set<Name> inner = scope;
                inner.insert(b.prefix.object);
                walk_nf(b.cont, inner);

                InDisjunction d;
                d.nonstrict = atom(false, b.prefix.object, b.prefix.channel,
                                   "In: base(" + b.prefix.object.ident + ") <= base(" +
                                       b.prefix.channel.ident + ")");
                d.provenance = "In " + b.prefix.channel.ident + "(" + b.prefix.object.ident + ")";
                TiedRelation tied(b.cont);
                for (std::size_t i = 0; i < b.cont.actives.size(); ++i) {
                    if (!tied.migratable(b.prefix.object, i)) continue;
                    for (const auto& y : tied.fn_of(i)) {
                        if (y == b.prefix.channel) continue;
                        if (!scope.count(y)) continue;
                        d.strict_conj.push_back(
                            atom(true, y, b.prefix.channel,
                                 "In: migratable " + excerpt(seq_to_term(*b.cont.actives[i])) +
                                     " needs base(" + y.ident + ") < base(" +
                                     b.prefix.channel.ident + ")"));
                    }
                }
                if (!d.strict_conj.empty()) disj.push_back(std::move(d));
                break;
            }
            }
        }
    }

    static std::string excerpt(const Term& t) {
        std::string s = print_term(t);
        if (s.size() > 48) s = s.substr(0, 45) + "...";
        return s;
    }
};

} // namespace

ConstraintSet generate_constraints(const Term& t, const TypeEnv* env) {
    Term u = satisfies_name_uniq(t) ? t : ensure_name_uniq(t);
    NormalForm nf = normalize(u);

    Generator gen;
    std::set<Name> frees = free_names(u);
    if (env) {
        for (const auto& [n, ty] : env->assignments())
            if (frees.count(n)) gen.vars.bind_annotation(gen.var_of(n), ty, n.ident);
    }
    gen.walk_nf(nf, frees);

    // P-safety: free names sit strictly above every restriction
    for (const auto& x : frees) {
        for (const auto& [y, ty] : all_restrictions(u)) {
            gen.atoms.push_back(gen.atom(true, x, y,
                                         "P-safe: base(" + x.ident + ") < base(" + y.ident +
                                             ")"));
        }
    }

    ConstraintSet cs;
    cs.base_var_count = 0;
    std::set<BaseVarId> reps;
    for (BaseVarId b = 0; b < gen.vars.bparent.size(); ++b) reps.insert(gen.vars.bfind(b));
    cs.base_var_count = reps.size();

    auto norm_atom = [&](OrderAtom a) {
        a.lhs = gen.vars.bfind(a.lhs);
        a.rhs = gen.vars.bfind(a.rhs);
        return a;
    };
    std::set<std::string> atom_seen;
    for (const auto& a : gen.atoms) {
        OrderAtom n = norm_atom(a);
        std::string k = (n.strict ? "s" : "n") + std::to_string(n.lhs) + "_" +
                        std::to_string(n.rhs);
        if (atom_seen.insert(k).second) cs.order_atoms.push_back(n);
    }
    for (const auto& d : gen.disj) {
        InDisjunction nd;
        nd.nonstrict = norm_atom(d.nonstrict);
        nd.provenance = d.provenance;
        for (const auto& a : d.strict_conj) nd.strict_conj.push_back(norm_atom(a));
        cs.disjunctions.push_back(std::move(nd));
    }
    for (const auto& [n, v] : gen.name_vars) cs.name_vars.emplace(n, gen.vars.tfind(v));
    for (const auto& [b, c] : gen.vars.constants) cs.base_constants.emplace(gen.vars.bfind(b), c);
    for (const auto& [n, v] : gen.name_vars) {
        BaseVarId b = gen.vars.base_of(gen.vars.tfind(v));
        cs.base_names[b].push_back(n.ident);
    }
    if (gen.vars.failure) {
        if (gen.vars.failure->find("occurs") != std::string::npos)
            cs.occurs_failure = gen.vars.failure;
        else
            cs.constant_clash = gen.vars.failure;
    }
    for (const auto& [n, v] : gen.name_vars) {
        TypeVarId rv = gen.vars.tfind(v);
        const auto& sh = gen.vars.shapes[rv];
        ConstraintSet::Shape s;
        s.base = gen.vars.bfind(sh.base);
        if (sh.pkind == VarStore::Payload::Var) s.payload = gen.vars.tfind(sh.payload);
        cs.shapes.emplace(rv, s);
        // ensure transitive shapes are present for annotation reconstruction
        TypeVarId cur = rv;
        std::size_t guard = 0;
        while (guard++ <= gen.vars.tparent.size()) {
            const auto& csh = gen.vars.shapes[gen.vars.tfind(cur)];
            ConstraintSet::Shape s2;
            s2.base = gen.vars.bfind(csh.base);
            if (csh.pkind == VarStore::Payload::Var) s2.payload = gen.vars.tfind(csh.payload);
            cs.shapes[gen.vars.tfind(cur)] = s2;
            if (csh.pkind != VarStore::Payload::Var) break;
            cur = csh.payload;
        }
    }

    // constraint-size property: distinct unordered pairs per polarity stay
    // within n(n-1)/2 for n base variables
    std::set<std::pair<BaseVarId, BaseVarId>> sp, np;
    auto upair = [](BaseVarId a, BaseVarId b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    for (const auto& a : cs.order_atoms) {
        if (a.lhs == a.rhs) continue;
        (a.strict ? sp : np).insert(upair(a.lhs, a.rhs));
    }
    for (const auto& d : cs.disjunctions) {
        if (d.nonstrict.lhs != d.nonstrict.rhs)
            np.insert(upair(d.nonstrict.lhs, d.nonstrict.rhs));
        for (const auto& a : d.strict_conj)
            if (a.lhs != a.rhs) sp.insert(upair(a.lhs, a.rhs));
    }
    const std::size_t n = cs.base_var_count;
    if (sp.size() > n * (n - 1) / 2 || np.size() > n * (n - 1) / 2)
        throw TypeError("order atom count exceeds n(n-1)/2");
    return cs;
}

// ---- order solving ---------------------------------------------------------

namespace {

struct Digraph {
    std::map<BaseVarId, std::vector<std::pair<BaseVarId, const OrderAtom*>>> adj;
    void add(const OrderAtom& a) { adj[a.lhs].push_back({a.rhs, &a}); }
};

// Tarjan SCC over the atom digraph.
struct Scc {
    std::map<BaseVarId, int> index, low, comp;
    std::vector<BaseVarId> stack;
    std::map<BaseVarId, bool> on_stack;
    int next_index = 0, next_comp = 0;
    const Digraph& g;

    explicit Scc(const Digraph& g_) : g(g_) {}

    void run(const std::set<BaseVarId>& nodes) {
        for (auto v : nodes)
            if (!index.count(v)) dfs(v);
    }

    void dfs(BaseVarId v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
        auto it = g.adj.find(v);
        if (it != g.adj.end()) {
            for (const auto& [w, _] : it->second) {
                if (!index.count(w)) {
                    dfs(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        }
        if (low[v] == index[v]) {
            while (true) {
                BaseVarId w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = next_comp;
                if (w == v) break;
            }
            ++next_comp;
        }
    }
};

std::vector<std::string> cycle_conflict(const Digraph& g, const Scc& scc,
                                        const OrderAtom& strict_edge) {
    // find a path rhs -> lhs inside the component to close the cycle
    std::vector<std::string> out;
    out.push_back(strict_edge.provenance);
    if (strict_edge.lhs == strict_edge.rhs) return out;
    std::map<BaseVarId, const OrderAtom*> via;
    std::vector<BaseVarId> q{strict_edge.rhs};
    via[strict_edge.rhs] = nullptr;
    int target_comp = scc.comp.at(strict_edge.lhs);
    while (!q.empty()) {
        BaseVarId v = q.back();
        q.pop_back();
        if (v == strict_edge.lhs) break;
        auto it = g.adj.find(v);
        if (it == g.adj.end()) continue;
        for (const auto& [w, a] : it->second) {
            if (scc.comp.count(w) == 0 || scc.comp.at(w) != target_comp) continue;
            if (via.count(w)) continue;
            via[w] = a;
            q.push_back(w);
        }
    }
    BaseVarId cur = strict_edge.lhs;
    std::vector<std::string> path;
    while (via.count(cur) && via[cur]) {
        path.push_back(via[cur]->provenance);
        cur = via[cur]->lhs;
    }
    std::reverse(path.begin(), path.end());
    out.insert(out.end(), path.begin(), path.end());
    return out;
}

struct BranchOutcome {
    bool sat = false;
    std::vector<std::string> conflict;
    std::map<BaseVarId, BaseVarId> merged_rep;   // after <=-SCC merging
    std::vector<std::pair<BaseVarId, BaseVarId>> dag_edges;
    std::set<BaseVarId> nodes;
};

BranchOutcome solve_branch(const ConstraintSet& cs, const std::vector<bool>& choice) {
    BranchOutcome out;
    std::vector<OrderAtom> atoms = cs.order_atoms;
    for (std::size_t i = 0; i < cs.disjunctions.size(); ++i) {
        const auto& d = cs.disjunctions[i];
        if (choice[i]) atoms.push_back(d.nonstrict);
        else
            for (const auto& a : d.strict_conj) atoms.push_back(a);
    }
    Digraph g;
    std::set<BaseVarId> nodes;
    for (const auto& a : atoms) {
        g.add(a);
        nodes.insert(a.lhs);
        nodes.insert(a.rhs);
    }
    Scc scc(g);
    scc.run(nodes);
    for (const auto& a : atoms) {
        if (!a.strict) continue;
        if (a.lhs == a.rhs || scc.comp.at(a.lhs) == scc.comp.at(a.rhs)) {
            out.sat = false;
            out.conflict = cycle_conflict(g, scc, a);
            if (a.lhs == a.rhs) {
                auto names = cs.base_names.find(a.lhs);
                if (names != cs.base_names.end()) {
                    std::string who;
                    for (const auto& n : names->second) who += (who.empty() ? "" : ", ") + n;
                    out.conflict.push_back(
                        "a base type must sit strictly above itself; names sharing it: " + who);
                }
            }
            return out;
        }
    }
    out.sat = true;
    out.nodes = nodes;
    // merge <=-equivalent nodes (same SCC), keep DAG edges between classes
    std::map<int, BaseVarId> comp_rep;
    for (auto v : nodes) {
        int c = scc.comp.at(v);
        auto it = comp_rep.find(c);
        if (it == comp_rep.end()) comp_rep.emplace(c, v);
        out.merged_rep[v] = comp_rep.count(c) ? comp_rep[c] : v;
    }
    std::set<std::pair<BaseVarId, BaseVarId>> seen;
    for (const auto& a : atoms) {
        BaseVarId l = out.merged_rep[a.lhs], r = out.merged_rep[a.rhs];
        if (l == r) continue;
        if (seen.insert({l, r}).second) out.dag_edges.push_back({l, r});
    }
    return out;
}

} // namespace

SolveResult solve(const ConstraintSet& cs) {
    SolveResult res;
    if (cs.occurs_failure || cs.constant_clash) {
        res.satisfiable = false;
        res.conflict.push_back(cs.occurs_failure ? *cs.occurs_failure : *cs.constant_clash);
        return res;
    }
    const std::size_t nd = cs.disjunctions.size();
    std::vector<bool> choice(nd, true); // prefer the nonstrict side
    std::vector<std::string> first_conflict;
    for (std::size_t mask = 0; mask < (std::size_t{1} << std::min<std::size_t>(nd, 20));
         ++mask) {
        for (std::size_t i = 0; i < nd; ++i) choice[i] = !(mask & (std::size_t{1} << i));
        BranchOutcome out = solve_branch(cs, choice);
        if (out.sat) {
            res.satisfiable = true;
            res.branch_choice = choice;
            for (auto v : out.nodes) {
                res.rep_of[v] = out.merged_rep[v];
                if (out.merged_rep[v] == v) res.representatives.push_back(v);
            }
            res.strict_order = out.dag_edges;
            return res;
        }
        if (first_conflict.empty()) first_conflict = out.conflict;
        if (nd == 0) break;
    }
    res.satisfiable = false;
    res.conflict = first_conflict;
    return res;
}

// ---- inference -------------------------------------------------------------

namespace {

struct ChainBuilder {
    const ConstraintSet& cs;
    std::set<BaseVarId> nodes; // merged reps plus unmentioned base reps
    std::map<BaseVarId, BaseVarId> rep;
    std::vector<std::pair<BaseVarId, BaseVarId>> edges;

    BaseVarId rep_of(BaseVarId v) const {
        auto it = rep.find(v);
        return it == rep.end() ? v : it->second;
    }

    // enumerate linear extensions of the DAG up to a budget
    bool extensions(std::size_t budget, const std::function<bool(const std::vector<BaseVarId>&)>& fn) {
        std::map<BaseVarId, std::size_t> indeg;
        std::map<BaseVarId, std::vector<BaseVarId>> adj;
        for (auto v : nodes) indeg[v] = 0;
        for (const auto& [a, b] : edges) {
            adj[a].push_back(b);
            ++indeg[b];
        }
        std::vector<BaseVarId> order;
        std::size_t used = 0;
        bool found = false;
        std::function<bool()> rec = [&]() -> bool {
            if (order.size() == nodes.size()) {
                ++used;
                found = true;
                return fn(order) || used >= budget;
            }
            for (auto v : nodes) {
                if (indeg[v] != 0) continue;
                bool taken = std::find(order.begin(), order.end(), v) != order.end();
                if (taken) continue;
                order.push_back(v);
                indeg[v] = static_cast<std::size_t>(-1);
                for (auto w : adj[v]) --indeg[w];
                bool stop = rec();
                for (auto w : adj[v]) ++indeg[w];
                indeg[v] = 0;
                order.pop_back();
                if (stop) return true;
                if (used >= budget) return true;
            }
            return false;
        };
        rec();
        return found;
    }
};

} // namespace

Term annotate(const Term& t, const std::map<Name, ChanType>& annotations) {
    std::function<Term(const Term&)> walk = [&](const Term& u) -> Term {
        switch (u->kind) {
        case TermKind::Nil:
            return u;
        case TermKind::Restrict: {
            auto it = annotations.find(u->binder);
            std::optional<ChanType> annot = u->annot;
            if (it != annotations.end()) annot = it->second;
            return mk_restrict(u->binder, annot, walk(u->body));
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

InferenceResult infer(const Term& t, const InferOptions& opts) {
    Term u = satisfies_name_uniq(t) ? t : ensure_name_uniq(t);
    ConstraintSet cs = generate_constraints(u);
    if (cs.occurs_failure || cs.constant_clash) {
        return InferenceResult{Untypable{{cs.occurs_failure ? *cs.occurs_failure
                                                            : *cs.constant_clash}}};
    }

    const std::size_t nd = cs.disjunctions.size();
    std::vector<std::string> first_conflict;
    std::size_t explored = 0;
    bool some_branch_sat = false;

    std::size_t branch_count = nd >= 20 ? (std::size_t{1} << 20) : (std::size_t{1} << nd);
    for (std::size_t mask = 0; mask < branch_count; ++mask) {
        std::vector<bool> choice(nd);
        for (std::size_t i = 0; i < nd; ++i) choice[i] = !(mask & (std::size_t{1} << i));
        BranchOutcome out = solve_branch(cs, choice);
        if (!out.sat) {
            if (first_conflict.empty()) first_conflict = out.conflict;
            continue;
        }
        some_branch_sat = true;

        ChainBuilder cb{cs, {}, out.merged_rep, out.dag_edges};
        for (auto v : out.nodes) cb.nodes.insert(out.merged_rep.at(v));
        // base vars never mentioned in atoms still need a slot in the chain
        std::set<BaseVarId> all_reps;
        for (const auto& [n, v] : cs.name_vars) {
            auto sh = cs.shapes.find(v);
            if (sh != cs.shapes.end()) all_reps.insert(sh->second.base);
        }
        for (const auto& [v, sh] : cs.shapes) all_reps.insert(sh.base);
        for (auto b : all_reps)
            if (!out.merged_rep.count(b)) cb.nodes.insert(b);

        InferenceResult found{Untypable{}};
        bool have = false;
        cb.extensions(opts.extension_budget, [&](const std::vector<BaseVarId>& order) {
            ++explored;
            // name the chain
            std::map<BaseVarId, BaseTypeId> base_name;
            std::set<std::string> taken;
            for (auto v : order) {
                std::string nm;
                auto c = cs.base_constants.find(v);
                if (c != cs.base_constants.end()) nm = c->second;
                else {
                    int k = static_cast<int>(base_name.size()) + 1;
                    do {
                        nm = "t" + std::to_string(k++);
                    } while (taken.count(nm));
                }
                if (!taken.insert(nm).second) return false; // constant repeated: skip
                base_name.emplace(v, nm);
            }
            std::vector<BaseTypeId> chain_nodes;
            for (auto v : order) chain_nodes.push_back(base_name.at(v));
            BaseForest T = BaseForest::chain(chain_nodes);

            // resolve a ChanType for a type var
            std::function<ChanType(TypeVarId, std::size_t)> resolve =
                [&](TypeVarId v, std::size_t guard) -> ChanType {
                auto sh = cs.shapes.find(v);
                BaseVarId b = sh != cs.shapes.end() ? sh->second.base : 0;
                BaseVarId mb = cb.rep_of(b);
                auto nit = base_name.find(mb);
                BaseTypeId base = nit != base_name.end() ? nit->second : base_name.begin()->second;
                if (sh != cs.shapes.end() && sh->second.payload && guard < 64)
                    return ChanType::chan(base, resolve(*sh->second.payload, guard + 1));
                return ChanType::bare(base);
            };

            std::map<Name, ChanType> annots;
            for (const auto& [x, ty] : all_restrictions(u)) {
                auto it = cs.name_vars.find(x);
                if (it == cs.name_vars.end()) continue;
                annots.emplace(x, resolve(it->second, 0));
            }
            TypeEnv env;
            for (const auto& x : free_names(u)) {
                auto it = cs.name_vars.find(x);
                if (it != cs.name_vars.end()) env.bind(x, resolve(it->second, 0));
            }
            Term annotated = annotate(u, annots);

            TypingProblem problem{normalize(annotated), T, env};
            TypecheckResult tc = typecheck(problem);
            if (!tc.ok) return false;
            if (!free_names(u).empty() && !p_safe(env, annotated, T)) return false;
            if (t_shaped(annotated, T) != Verdict::True) return false;
            TypableWitness w;
            w.forest = T;
            w.annotations = annots;
            w.env = env;
            w.term = annotated;
            found = InferenceResult{std::move(w)};
            have = true;
            return true;
        });
        if (have) return found;
        if (explored >= opts.extension_budget) break;
    }

    if (some_branch_sat) {
        TypableButNotTShaped r;
        r.explored_extensions = explored;
        r.details = "no linear extension yielded a T-shaped witness within the budget";
        return InferenceResult{r};
    }
    return InferenceResult{Untypable{first_conflict}};
}

} // namespace pihier
