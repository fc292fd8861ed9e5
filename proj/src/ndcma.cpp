#include "pihier/ndcma.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

#include "pihier/canonical.hpp"
#include "pihier/printer.hpp"

namespace pihier {

DataValue DataStore::alloc(std::optional<DataValue> parent) {
    DataValue v = static_cast<DataValue>(levels_.size());
    if (parent) {
        parents_.push_back(*parent);
        levels_.push_back(static_cast<std::uint32_t>(levels_[*parent] + 1));
    } else {
        parents_.push_back(v);
        levels_.push_back(1);
    }
    return v;
}

std::optional<DataValue> DataStore::parent(DataValue d) const {
    if (parents_[d] == d) return std::nullopt;
    return parents_[d];
}

std::vector<DataValue> DataStore::path(DataValue d) const {
    std::vector<DataValue> out;
    DataValue cur = d;
    while (true) {
        out.push_back(cur);
        if (parents_[cur] == cur) break;
        cur = parents_[cur];
    }
    std::reverse(out.begin(), out.end());
    return out;
}

StateId Automaton::intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    StateId id = static_cast<StateId>(names_.size());
    names_.push_back(name);
    ids_.emplace(name, id);
    return id;
}

std::optional<StateId> Automaton::find_state(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

Config initial_config(const Automaton& a) {
    Config c;
    c.state = a.initial_state;
    std::vector<DataValue> vals(a.initial_memory.size());
    for (std::size_t i = 0; i < a.initial_memory.size(); ++i) {
        const auto& e = a.initial_memory[i];
        std::optional<DataValue> parent;
        if (e.parent) parent = vals[*e.parent];
        vals[i] = c.store.alloc(parent);
        auto s = a.find_state(e.label);
        if (!s) throw EncodingError("initial memory label '" + e.label + "' is not a state");
        c.memory[vals[i]] = *s;
    }
    return c;
}

namespace {

bool path_fully_labelled(const Config& c, DataValue d) {
    for (DataValue v : c.store.path(d))
        if (!c.memory.count(v)) return false;
    return true;
}

bool is_strict_ancestor(const Config& c, DataValue anc, DataValue d) {
    auto p = c.store.parent(d);
    while (p) {
        if (*p == anc) return true;
        p = c.store.parent(*p);
    }
    return false;
}

} // namespace

std::vector<Config> step(const Automaton& a, const Config& c) {
    std::vector<Config> out;
    std::set<std::string> seen;
    auto emit = [&](Config&& nc) {
        std::string k = config_key(a, nc);
        if (seen.insert(k).second) out.push_back(std::move(nc));
    };

    std::vector<DataValue> labelled;
    for (const auto& [v, q] : c.memory) labelled.push_back(v);

    for (const auto& tr : a.concrete) {
        if (tr.from != c.state) continue;
        const std::size_t lvl = tr.pre.size();
        std::size_t j = 0;
        while (j < lvl && tr.pre[j] != kFreshSlot) ++j;
        for (std::size_t k = j; k < lvl; ++k)
            if (tr.pre[k] != kFreshSlot)
                throw EncodingError("concrete transition has a non-suffix fresh pattern");

        auto fire = [&](std::optional<DataValue> anchor) {
            Config nc = c;
            DataValue cur = anchor ? *anchor : 0;
            std::optional<DataValue> parent = anchor;
            for (std::size_t k = j; k < lvl; ++k) {
                cur = nc.store.alloc(parent);
                parent = cur;
            }
            // relabel the full path positions 1..lvl
            std::vector<DataValue> path = nc.store.path(parent ? *parent : cur);
            if (lvl == 0) {
                nc.state = tr.to;
                emit(std::move(nc));
                return;
            }
            for (std::size_t k = 0; k < lvl; ++k) nc.memory[path[k]] = tr.post[k];
            nc.state = tr.to;
            emit(std::move(nc));
        };

        if (j == 0) {
            fire(std::nullopt);
            continue;
        }
        for (DataValue v : labelled) {
            if (c.store.level(v) != j) continue;
            std::vector<DataValue> path = c.store.path(v);
            bool ok = true;
            for (std::size_t k = 0; k < j; ++k) {
                auto it = c.memory.find(path[k]);
                if (it == c.memory.end() || it->second != tr.pre[k]) { ok = false; break; }
            }
            if (ok) fire(v);
        }
    }

    for (const auto& tr : a.patterns) {
        if (tr.from != c.state) continue;
        const std::size_t n = tr.pre.size();
        // chains d1 > d2 > ... > dn of labelled values on one path
        std::vector<DataValue> chain(n);
        std::function<void(std::size_t)> match = [&](std::size_t k) {
            if (k == n) {
                std::optional<DataValue> deepest =
                    n == 0 ? std::nullopt : std::optional<DataValue>(chain[n - 1]);
                if (deepest && !path_fully_labelled(c, *deepest)) return;
                if (tr.fresh && deepest &&
                    c.store.level(*deepest) + 1 > a.level)
                    return;
                Config nc = c;
                for (std::size_t i = 0; i < n; ++i) nc.memory[chain[i]] = tr.post[i];
                if (tr.fresh) {
                    DataValue nv = nc.store.alloc(deepest);
                    nc.memory[nv] = *tr.fresh;
                }
                nc.state = tr.to;
                emit(std::move(nc));
                return;
            }
            for (DataValue v : labelled) {
                if (c.memory.at(v) != tr.pre[k]) continue;
                if (k > 0 && !is_strict_ancestor(c, chain[k - 1], v)) continue;
                chain[k] = v;
                match(k + 1);
            }
        };
        match(0);
    }
    return out;
}

std::string config_key(const Automaton& a, const Config& c) {
    // forest of non-garbage labelled values, canonical per subtree
    std::map<DataValue, std::vector<DataValue>> kids;
    std::vector<DataValue> roots;
    for (const auto& [v, q] : c.memory) {
        if (a.garbage_state && q == *a.garbage_state) continue;
        // parent chain may contain garbage values: attach to the nearest
        // non-garbage labelled ancestor
        std::optional<DataValue> p = c.store.parent(v);
        while (p) {
            auto it = c.memory.find(*p);
            if (it != c.memory.end() && !(a.garbage_state && it->second == *a.garbage_state))
                break;
            p = c.store.parent(*p);
        }
        if (p) kids[*p].push_back(v);
        else roots.push_back(v);
    }
    std::function<std::string(DataValue)> enc = [&](DataValue v) {
        std::vector<std::string> ck;
        for (DataValue w : kids[v]) ck.push_back(enc(w));
        std::sort(ck.begin(), ck.end());
        std::string out = a.state_name(c.memory.at(v)) + "(";
        for (const auto& k : ck) out += k + ",";
        out += ")";
        return out;
    };
    std::vector<std::string> rk;
    for (DataValue r : roots) rk.push_back(enc(r));
    std::sort(rk.begin(), rk.end());
    std::string out = "Q:" + a.state_name(c.state) + "[";
    for (const auto& k : rk) out += k + ";";
    out += "]";
    return out;
}

std::vector<Config> ready_step(const Automaton& a, const Config& c,
                               const ReadyStepOptions& opts) {
    std::vector<Config> out;
    std::set<std::string> out_seen, interior_seen;
    std::deque<Config> frontier;
    frontier.push_back(c);
    interior_seen.insert(config_key(a, c));
    std::size_t explored = 0;
    while (!frontier.empty()) {
        Config cur = std::move(frontier.front());
        frontier.pop_front();
        for (auto& succ : step(a, cur)) {
            if (++explored > opts.max_interior)
                throw InteriorBudgetExceeded("ready_step interior budget exceeded");
            std::string k = config_key(a, succ);
            if (succ.state == a.initial_state) { // ready
                if (out_seen.insert(k).second) out.push_back(std::move(succ));
                continue;
            }
            if (interior_seen.insert(k).second) frontier.push_back(std::move(succ));
        }
    }
    return out;
}

// ---- pi -> NDCMA -----------------------------------------------------------

namespace {

struct PiEncoder {
    const BaseForest& T;
    Automaton a;
    StateId ready, send, rec, qdag;
    std::map<BaseTypeId, Name> chi_names;
    std::map<std::uint64_t, BaseTypeId> base_of_uid;
    std::map<std::string, SeqPtr> deriv_by_state;
    std::size_t fresh_counter = 0;
    std::map<Name, ChanType> types;

    explicit PiEncoder(const BaseForest& T_) : T(T_) {
        ready = a.intern("ready");
        send = a.intern("send");
        rec = a.intern("rec");
        qdag = a.intern("q_dag");
        a.initial_state = ready;
        a.garbage_state = qdag;
        a.level = T.height() + 1;
    }

    StateId chi(const BaseTypeId& b) { return a.intern("x:" + b); }
    StateId chi_set(const BaseTypeId& b) { return a.intern("x:" + b + ":set"); }
    StateId chi_sp(const BaseTypeId& b) { return a.intern("x:" + b + ":sp"); }
    StateId chi_syn(const BaseTypeId& b) { return a.intern("x:" + b + ":syn"); }
    StateId chi_msg(const BaseTypeId& b) { return a.intern("x:" + b + ":msg"); }
    StateId chi_synmsg(const BaseTypeId& b) { return a.intern("x:" + b + ":synmsg"); }

    StateId fresh(const std::string& tag) {
        return a.intern("#" + std::to_string(fresh_counter++) + ":" + tag);
    }

    static std::string deriv_key(const SeqPtr& s) {
        return "D:" + canonical(seq_to_term(*s));
    }

    StateId deriv_state(const SeqPtr& s) {
        std::string key = deriv_key(s);
        auto it = deriv_by_state.find(key);
        if (it == deriv_by_state.end()) deriv_by_state.emplace(key, s);
        return a.intern(key);
    }

    BaseTypeId base_of(const Name& n) const {
        auto it = base_of_uid.find(n.uid);
        if (it == base_of_uid.end())
            throw EncodingError("name '" + n.ident + "' has no chi base");
        return it->second;
    }

    void pattern(StateId from, std::vector<StateId> pre, StateId to, std::vector<StateId> post,
                 std::optional<StateId> fresh_label = std::nullopt) {
        PatternTransition t;
        t.from = from;
        t.to = to;
        t.pre = std::move(pre);
        t.post = std::move(post);
        t.fresh = fresh_label;
        a.patterns.push_back(std::move(t));
    }

    // Phi'(C): the continuation's canonical forest; names are already chi
    LabelledForest phi_of(const NormalForm& nf) { return phi(nf, T); }

    // external anchor base of a tree: the deepest base among free names of
    // its leaves that are not bound by the tree's own nodes
    std::optional<BaseTypeId> anchor_of(const LabelledForest& f, NodeId root) {
        std::set<std::uint64_t> internal;
        std::vector<NodeId> stack{root};
        std::vector<NodeId> nodes;
        while (!stack.empty()) {
            NodeId id = stack.back();
            stack.pop_back();
            nodes.push_back(id);
            if (f.is_name(id)) internal.insert(f.name_label(id).name.uid);
            for (NodeId ch : f.children(id)) stack.push_back(ch);
        }
        std::optional<BaseTypeId> best;
        for (NodeId id : nodes) {
            if (f.is_name(id)) continue;
            for (const auto& n : free_names(*f.seq_label(id))) {
                if (internal.count(n.uid)) continue;
                BaseTypeId b = base_of(n);
                if (!best) best = b;
                else if (T.less(*best, b)) best = b;
                else if (*best != b && !T.less(b, *best))
                    throw EncodingError("incomparable anchors in one leaf; term not T-shaped");
            }
        }
        return best;
    }

    // Setup: allocate the forest under the value labelled `target` (root
    // level when absent), then relabel target to `restore`.
    StateId gen_setup(StateId from, StateId to, std::optional<StateId> target,
                      std::optional<StateId> restore, const LabelledForest& f,
                      const std::vector<NodeId>& roots) {
        StateId cur = from;
        auto tvec = [&]() {
            return target ? std::vector<StateId>{*target} : std::vector<StateId>{};
        };
        // canonical order: sort roots by subtree key
        std::vector<std::pair<std::string, NodeId>> ordered;
        std::function<std::string(NodeId)> key = [&](NodeId id) -> std::string {
            if (!f.is_name(id)) return "L" + deriv_key(f.seq_label(id));
            std::vector<std::string> ck;
            for (NodeId ch : f.children(id)) ck.push_back(key(ch));
            std::sort(ck.begin(), ck.end());
            std::string out = "N" + f.name_label(id).base + "(";
            for (auto& k : ck) out += k + ",";
            return out + ")";
        };
        for (NodeId r : roots) ordered.emplace_back(key(r), r);
        std::sort(ordered.begin(), ordered.end());

        for (const auto& [k, r] : ordered) {
            if (!f.is_name(r)) {
                StateId next = fresh("setup");
                pattern(cur, tvec(), next, tvec(), deriv_state(f.seq_label(r)));
                cur = next;
            } else {
                const auto& nl = f.name_label(r);
                StateId setlab = chi_set(nl.base);
                StateId s1 = fresh("setup");
                pattern(cur, tvec(), s1, tvec(), setlab);
                StateId s2 = fresh("setup");
                gen_setup(s1, s2, setlab, chi(nl.base), f, f.children(r));
                cur = s2;
            }
        }
        if (target) {
            pattern(cur, {*target}, to, {*restore});
        } else {
            pattern(cur, {}, to, {});
        }
        return to;
    }

    // Spawn: append each tree of f to the path above the value labelled
    // `moving`, then relabel moving to `final_label`.
    void gen_spawn(StateId from, StateId to, StateId moving, StateId final_label,
                   const LabelledForest& f, const std::vector<NodeId>& roots) {
        StateId cur = from;
        std::vector<std::pair<std::string, NodeId>> ordered;
        for (NodeId r : roots) ordered.emplace_back(std::to_string(r), r);
        std::sort(ordered.begin(), ordered.end());
        for (const auto& [k, r] : ordered) {
            auto anchor = anchor_of(f, r);
            if (anchor) {
                StateId s1 = fresh("spawn");
                pattern(cur, {chi(*anchor), moving}, s1, {chi_sp(*anchor), moving});
                StateId s2 = fresh("spawn");
                gen_setup(s1, s2, chi_sp(*anchor), chi(*anchor), f, {r});
                cur = s2;
            } else {
                StateId s2 = fresh("spawn");
                gen_setup(cur, s2, std::nullopt, std::nullopt, f, {r});
                cur = s2;
            }
        }
        pattern(cur, {moving}, to, {final_label});
    }

    std::string cont_key(const Term& t) { return canonical(t); }

    std::set<std::string> emitted;

    // `orig` drives the payload types (distinct restrictions may share a chi
    // name yet carry different payloads); `d` is the chi instance whose
    // names appear in the generated patterns.
    void react(const SeqPtr& orig, const SeqPtr& d) {
        StateId sD = deriv_state(d);
        StateId after = d->replicated ? sD : qdag;
        if (orig->branches.size() != d->branches.size())
            throw EncodingError("derivative instance lost branches");
        for (std::size_t bi = 0; bi < d->branches.size(); ++bi) {
            const auto& b = d->branches[bi];
            const auto& ob = orig->branches[bi];
            switch (b.prefix.kind) {
            case PrefixKind::Tau: {
                // one-party round: mark the leaf, spawn the continuation
                Term cont = to_term(b.cont);
                std::string sig = "t|" + std::to_string(sD) + "|" + cont_key(cont);
                if (!emitted.insert(sig).second) break;
                StateId wait = a.intern("W:" + cont_key(cont) + ":wait");
                StateId q1 = fresh("react.tau");
                pattern(ready, {sD}, q1, {wait});
                LabelledForest pc = phi_of(b.cont);
                gen_spawn(q1, ready, wait, after, pc, pc.roots());
                break;
            }
            case PrefixKind::Output: {
                BaseTypeId tc = base_of(b.prefix.channel);
                BaseTypeId tm = base_of(b.prefix.object);
                Term cont = to_term(b.cont);
                std::string sig = "o|" + std::to_string(sD) + "|" + tc + "|" + tm + "|" +
                                  std::to_string(b.prefix.channel == b.prefix.object) + "|" +
                                  cont_key(cont);
                if (!emitted.insert(sig).second) break;
                StateId wait = a.intern("W:" + cont_key(cont) + ":wait");
                StateId q1 = fresh("react.out");
                if (b.prefix.channel == b.prefix.object) {
                    pattern(ready, {chi(tc), sD}, q1, {chi_synmsg(tc), wait});
                } else if (T.less(tc, tm)) {
                    pattern(ready, {chi(tc), chi(tm), sD}, q1,
                            {chi_syn(tc), chi_msg(tm), wait});
                } else if (T.less(tm, tc)) {
                    pattern(ready, {chi(tm), chi(tc), sD}, q1,
                            {chi_msg(tm), chi_syn(tc), wait});
                } else {
                    throw EncodingError("sender uses incomparable channel and message bases");
                }
                LabelledForest pc = phi_of(b.cont);
                gen_spawn(q1, send, wait, after, pc, pc.roots());
                break;
            }
            case PrefixKind::Input: {
                BaseTypeId tc = base_of(b.prefix.channel);
                auto tyc = types.find(ob.prefix.channel);
                if (tyc == types.end() || !tyc->second.payload)
                    throw EncodingError("input channel without payload type");
                BaseTypeId tm = tyc->second.payload->base;
                Term cont = to_term(b.cont);
                Term csub = substitute(cont, b.prefix.object, chi_names.at(tm));
                NormalForm csubnf = normalize(csub);
                std::string sig = "i|" + std::to_string(sD) + "|" + tc + "|" + tm + "|" +
                                  cont_key(csub);
                if (!emitted.insert(sig).second) break;
                StateId recm = a.intern("W:" + cont_key(csub) + ":rec");
                StateId q2 = fresh("react.in");
                if (tm == tc) {
                    pattern(send, {chi_synmsg(tc), sD}, q2, {chi(tc), recm});
                    LabelledForest pc = phi_of(csubnf);
                    gen_spawn(q2, ready, recm, after, pc, pc.roots());
                } else if (T.less(tm, tc)) {
                    pattern(send, {chi_msg(tm), chi_syn(tc), sD}, q2,
                            {chi(tm), chi(tc), recm});
                    LabelledForest pc = phi_of(csubnf);
                    gen_spawn(q2, ready, recm, after, pc, pc.roots());
                } else if (T.less(tc, tm)) {
                    pattern(send, {chi_syn(tc), sD}, q2, {chi(tc), recm});
                    LabelledForest pc = phi_of(csubnf);
                    // mig: trees holding a leaf tied to the received chi name
                    TiedRelation tied(csubnf);
                    std::map<std::string, bool> leaf_tied;
                    for (std::size_t i = 0; i < csubnf.actives.size(); ++i)
                        leaf_tied[rigid_seq_key(*csubnf.actives[i])] =
                            leaf_tied[rigid_seq_key(*csubnf.actives[i])] ||
                            tied.name_tied(chi_names.at(tm), i);
                    std::vector<NodeId> mig_roots, nmig_roots;
                    for (NodeId r : pc.roots()) {
                        bool has_tied = false, has_leaf = false;
                        std::vector<NodeId> stack{r};
                        while (!stack.empty()) {
                            NodeId id = stack.back();
                            stack.pop_back();
                            if (!pc.is_name(id)) {
                                has_leaf = true;
                                if (leaf_tied[rigid_seq_key(*pc.seq_label(id))])
                                    has_tied = true;
                            }
                            for (NodeId ch : pc.children(id)) stack.push_back(ch);
                        }
                        (has_leaf && has_tied ? mig_roots : nmig_roots).push_back(r);
                    }
                    StateId q3 = fresh("react.in.mig");
                    gen_spawn(q2, q3, recm, after, pc, nmig_roots);
                    gen_setup(q3, ready, chi_msg(tm), chi(tm), pc, mig_roots);
                } else {
                    throw EncodingError("receiver bases incomparable");
                }
                break;
            }
            }
        }
    }
};

} // namespace

PiEncoding encode_pi(const Term& t, const BaseForest& T, const EncodeOptions& opts) {
    if (!free_names(t).empty())
        throw EncodingError("encode_pi: term must be closed");
    for (const auto& [n, ty] : all_restrictions(t))
        if (!ty) throw EncodingError("encode_pi: restriction '" + n.ident + "' unannotated");

    Term u = ensure_name_uniq(t);
    NormalForm nf = normalize(u);

    if (opts.require_typable) {
        TypingProblem problem{nf, T, {}};
        TypecheckResult tc = typecheck(problem);
        if (!tc.ok) throw EncodingError("encode_pi: term does not typecheck");
    }
    if (t_shaped(u, T) != Verdict::True)
        throw EncodingError("encode_pi: term is not T-shaped");

    Term tchi = chi_rename(to_term(nf), T);
    NormalForm nfchi = normalize(tchi);

    PiEncoder enc(T);
    enc.types = name_types(tchi);
    for (const auto& b : T.nodes()) enc.chi_names.emplace(b, fresh_name(chi_ident(b)));
    for (const auto& [n, ty] : enc.types) enc.base_of_uid.emplace(n.uid, ty.base);
    for (const auto& [b, n] : enc.chi_names) {
        enc.base_of_uid.emplace(n.uid, b);
        enc.types.emplace(n, ChanType::bare(b)); // placeholder; refined below
    }

    // chi instantiation of the derivatives (two-phase simultaneous subst);
    // originals ride along so each instance keeps its own payload types
    std::vector<std::pair<SeqPtr, SeqPtr>> instances;
    {
        for (const auto& d : derivatives(tchi)) {
            Term inst = seq_to_term(*d);
            std::vector<std::pair<Name, Name>> phases;
            for (const auto& x : free_names(*d)) {
                auto it = enc.base_of_uid.find(x.uid);
                if (it == enc.base_of_uid.end())
                    throw EncodingError("encode_pi: derivative with untyped free name '" +
                                        x.ident + "'");
                phases.emplace_back(x, enc.chi_names.at(it->second));
            }
            std::vector<Name> temps;
            for (const auto& [from, to] : phases) {
                Name tmp = fresh_name(from.ident + "#t");
                temps.push_back(tmp);
                inst = substitute(inst, from, tmp);
            }
            for (std::size_t i = 0; i < phases.size(); ++i)
                inst = substitute(inst, temps[i], phases[i].second);
            NormalForm instnf = normalize(inst);
            if (instnf.actives.size() != 1)
                throw EncodingError("encode_pi: derivative instance not sequential");
            instances.emplace_back(d, instnf.actives[0]);
        }
    }

    // instance types: binders inside instances carry their annotations
    for (const auto& [orig, s] : instances) {
        auto tmap = name_types(seq_to_term(*s));
        for (const auto& [n, ty] : tmap) {
            enc.types.emplace(n, ty);
            enc.base_of_uid.emplace(n.uid, ty.base);
        }
    }

    for (const auto& [orig, s] : instances) enc.react(orig, s);

    // initial memory from Phi'(P)
    LabelledForest f0 = phi(nfchi, T);
    std::map<NodeId, std::size_t> slot;
    // parents before children
    std::vector<NodeId> order;
    std::deque<NodeId> q;
    for (NodeId r : f0.roots()) q.push_back(r);
    while (!q.empty()) {
        NodeId id = q.front();
        q.pop_front();
        order.push_back(id);
        for (NodeId ch : f0.children(id)) q.push_back(ch);
    }
    for (NodeId id : order) {
        MemoryEntry e;
        if (f0.node(id).parent != kNoNode) e.parent = slot.at(f0.node(id).parent);
        if (f0.is_name(id)) e.label = "x:" + f0.name_label(id).base;
        else e.label = PiEncoder::deriv_key(f0.seq_label(id));
        enc.a.intern(e.label);
        slot[id] = enc.a.initial_memory.size();
        enc.a.initial_memory.push_back(std::move(e));
    }

    PiEncoding out;
    out.automaton = std::move(enc.a);
    out.forest = T;
    out.chi_term = to_term(nfchi);
    return out;
}

// ---- the ~ relation --------------------------------------------------------

bool sim_check(const Term& t, const Automaton& a, const Config& c, const BaseForest& T) {
    if (c.state != a.initial_state) return false;

    Term tchi = chi_rename(t, T);
    NormalForm nf = normalize(tchi);
    // the check is on congruence classes: drop restrictions whose scope died
    // (the memory side keeps matching inert chi skeletons instead)
    {
        std::set<std::uint64_t> used;
        for (const auto& s : nf.actives)
            for (const auto& n : free_names(*s)) used.insert(n.uid);
        std::erase_if(nf.restrictions,
                      [&](const Restriction& r) { return !used.count(r.name.uid); });
    }
    LabelledForest f = phi(nf, T);

    // target values: non-garbage labelled
    std::vector<DataValue> values;
    for (const auto& [v, q] : c.memory) {
        if (a.garbage_state && q == *a.garbage_state) continue;
        values.push_back(v);
    }
    std::map<DataValue, std::vector<DataValue>> kids;
    for (DataValue v : values) {
        auto p = c.store.parent(v);
        if (p) kids[*p].push_back(v);
    }

    auto node_label = [&](NodeId id) -> std::string {
        if (f.is_name(id)) return "x:" + f.name_label(id).base;
        return "D:" + canonical(seq_to_term(*f.seq_label(id)));
    };

    std::map<DataValue, bool> used;
    std::function<bool(NodeId, DataValue)> match_at = [&](NodeId id, DataValue v) -> bool {
        if (used[v]) return false;
        auto lbl = c.memory.find(v);
        if (lbl == c.memory.end() || a.state_name(lbl->second) != node_label(id)) return false;
        used[v] = true;
        std::vector<NodeId> ch = f.children(id);
        std::function<bool(std::size_t)> assign = [&](std::size_t k) -> bool {
            if (k == ch.size()) return true;
            for (DataValue w : kids[v]) {
                if (used[w]) continue;
                auto snap = used;
                if (match_at(ch[k], w) && assign(k + 1)) return true;
                used = snap;
            }
            return false;
        };
        if (!assign(0)) {
            used[v] = false;
            return false;
        }
        return true;
    };

    // Clause iv, with one documented reading: leftovers must be garbage,
    // except inert name skeletons (plain chi labels whose whole scope died),
    // which normalisation drops on the term side.
    auto plain_chi = [&](DataValue v) {
        const std::string& n = a.state_name(c.memory.at(v));
        return n.rfind("x:", 0) == 0 && n.find(':', 2) == std::string::npos;
    };
    std::vector<NodeId> roots = f.roots();
    std::function<bool(std::size_t)> place = [&](std::size_t k) -> bool {
        if (k == roots.size()) {
            for (DataValue v : values) {
                if (used[v]) continue;
                if (!plain_chi(v)) return false;
                // a dead skeleton has no live (matched) value below it
                for (DataValue w : values)
                    if (used[w] && is_strict_ancestor(c, v, w)) return false;
            }
            return true;
        }
        for (DataValue v : values) {
            if (used[v]) continue;
            auto snap = used;
            if (match_at(roots[k], v) && place(k + 1)) return true;
            used = snap;
        }
        return false;
    };
    for (DataValue v : values) used[v] = false;
    return place(0);
}

// ---- NDCMA -> pi ------------------------------------------------------------

NdaEncoding encode_nda(const Automaton& a) {
    if (!a.initial_memory.empty())
        throw EncodingError("encode_nda: only all-fresh initial memories are supported");
    if (!a.patterns.empty())
        throw EncodingError("encode_nda: only concrete transitions are supported");
    for (const auto& tr : a.concrete) {
        bool seen_fresh = false;
        for (auto p : tr.pre) {
            if (p == kFreshSlot) seen_fresh = true;
            else if (seen_fresh)
                throw EncodingError("encode_nda: fresh slots must form a suffix");
        }
        if (tr.pre.size() > a.level)
            throw EncodingError("encode_nda: transition level exceeds the automaton level");
    }

    NdaEncoding out;
    out.r = fresh_name("r");
    const BaseTypeId t_r = "t_r";

    std::vector<std::string> state_names;
    for (StateId s = 0; s < a.state_count(); ++s) state_names.push_back(a.state_name(s));

    // chain: t_r, then every c^i_q base ordered by (level, state)
    std::vector<BaseTypeId> chain{t_r};
    auto base_of = [&](std::size_t lvl, StateId q) {
        return "t_c" + std::to_string(lvl) + "_" + state_names[q];
    };
    for (std::size_t lvl = 0; lvl <= a.level; ++lvl)
        for (StateId q = 0; q < a.state_count(); ++q) chain.push_back(base_of(lvl, q));
    out.forest = BaseForest::chain(chain);
    for (std::size_t lvl = 0; lvl <= a.level; ++lvl)
        for (StateId q = 0; q < a.state_count(); ++q)
            out.chan_info.emplace(base_of(lvl, q), std::make_pair(lvl, state_names[q]));

    out.env.bind(out.r, ChanType::bare(t_r));

    // theta_j: transitions with exactly j non-fresh memory slots
    std::vector<std::vector<const ConcreteTransition*>> theta(a.level + 1);
    for (const auto& tr : a.concrete) {
        std::size_t j = 0;
        while (j < tr.pre.size() && tr.pre[j] != kFreshSlot) ++j;
        theta[j].push_back(&tr);
    }

    using Block = std::map<StateId, Name>; // level block: state -> channel name
    auto fresh_block = [&](std::size_t lvl) {
        Block b;
        for (StateId q = 0; q < a.state_count(); ++q)
            b.emplace(q, fresh_name("c" + std::to_string(lvl) + "_" + state_names[q]));
        return b;
    };
    auto chan_type = [&](std::size_t lvl, StateId q) {
        return ChanType::chan(base_of(lvl, q), ChanType::bare(t_r));
    };

    // A_tr under an environment of blocks for levels 0..j
    std::function<Term(const ConcreteTransition&, const std::vector<Block>&)> a_tr =
        [&](const ConcreteTransition& tr, const std::vector<Block>& env) -> Term {
        const std::size_t i = tr.pre.size();
        std::size_t j = 0;
        while (j < i && tr.pre[j] != kFreshSlot) ++j;

        std::vector<Block> env2 = env; // levels 0..j available
        std::vector<Block> alloc;      // levels j+1..i
        for (std::size_t k = j + 1; k <= i; ++k) {
            alloc.push_back(fresh_block(k));
            env2.push_back(alloc.back());
        }

        // parallel body: re-emit outputs for levels 0..i, then nested P_theta
        std::vector<Term> actives;
        actives.push_back(
            mk_prefix(Prefix::output(env2[0].at(tr.to), out.r), mk_nil()));
        for (std::size_t k = 1; k <= i; ++k)
            actives.push_back(
                mk_prefix(Prefix::output(env2[k].at(tr.post[k - 1]), out.r), mk_nil()));
        for (std::size_t k = j + 1; k <= i; ++k) {
            for (const auto* tr2 : theta[k]) {
                std::vector<Block> sub(env2.begin(), env2.begin() + k + 1);
                actives.push_back(mk_repl(a_tr(*tr2, sub)));
            }
        }
        Term body = actives.back();
        for (std::size_t k = actives.size() - 1; k-- > 0;) body = mk_par(actives[k], body);

        // nu C^{j+1} ... nu C^{i}
        for (std::size_t k = i; k > j; --k) {
            const Block& blk = alloc[k - j - 1];
            for (auto it = blk.rbegin(); it != blk.rend(); ++it)
                body = mk_restrict(it->second, chan_type(k, it->first), body);
        }

        // input prefixes c^j_{q_j} ... c^0_{q0} (innermost first)
        for (std::size_t k = j; k > 0; --k) {
            Name dummy = fresh_name("z");
            body = mk_prefix(Prefix::input(env[k].at(tr.pre[k - 1]), dummy), body);
        }
        Name dummy = fresh_name("z");
        body = mk_prefix(Prefix::input(env[0].at(tr.from), dummy), body);
        return body;
    };

    Block c0 = fresh_block(0);
    std::vector<Term> top;
    for (const auto* tr : theta[0]) top.push_back(mk_repl(a_tr(*tr, {c0})));
    top.push_back(mk_prefix(Prefix::output(c0.at(a.initial_state), out.r), mk_nil()));
    Term body = top.back();
    for (std::size_t k = top.size() - 1; k-- > 0;) body = mk_par(top[k], body);
    for (auto it = c0.rbegin(); it != c0.rend(); ++it)
        body = mk_restrict(it->second, chan_type(0, it->first), body);

    out.term = ensure_name_uniq(body);
    return out;
}

std::optional<std::string> z_observation(const NormalForm& nf, const NdaEncoding& enc) {
    std::map<std::uint64_t, BaseTypeId> bases;
    for (const auto& r : nf.restrictions)
        if (r.type) bases.emplace(r.name.uid, r.type->base);
    std::vector<std::string> hits;
    for (const auto& a : nf.actives) {
        if (a->replicated) continue;
        for (const auto& b : a->branches) {
            if (b.prefix.kind != PrefixKind::Output) continue;
            auto it = bases.find(b.prefix.channel.uid);
            if (it == bases.end()) continue;
            auto ci = enc.chan_info.find(it->second);
            if (ci != enc.chan_info.end() && ci->second.first == 0)
                hits.push_back(ci->second.second);
        }
    }
    if (hits.size() == 1) return hits[0];
    return std::nullopt;
}

std::vector<NormalForm> z_successors(const NormalForm& nf, const NdaEncoding& enc,
                                     const ZStepOptions& opts) {
    std::vector<NormalForm> out;
    std::set<std::string> out_seen, interior_seen;
    std::deque<NormalForm> frontier;
    frontier.push_back(nf);
    interior_seen.insert(canonical(nf));
    std::size_t explored = 0;
    while (!frontier.empty()) {
        NormalForm cur = std::move(frontier.front());
        frontier.pop_front();
        for (const auto& r : redexes(cur)) {
            if (++explored > opts.max_interior)
                throw InteriorBudgetExceeded("z_successors interior budget exceeded");
            NormalForm succ = reduce(cur, r);
            std::string k = canonical(succ);
            if (z_observation(succ, enc)) {
                if (out_seen.insert(k).second) out.push_back(std::move(succ));
                continue;
            }
            if (interior_seen.insert(k).second) frontier.push_back(std::move(succ));
        }
    }
    return out;
}

} // namespace pihier
