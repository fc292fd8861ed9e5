#include "pihier/forest.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "pihier/canonical.hpp"

namespace pihier {

NodeId LabelledForest::add_name_node(NodeId parent, Name n, BaseTypeId base,
                                     std::optional<ChanType> type) {
    return add_node(parent, NameLabel{std::move(n), std::move(base), std::move(type)});
}

NodeId LabelledForest::add_seq_node(NodeId parent, SeqPtr s) {
    return add_node(parent, ForestLabel{std::move(s)});
}

NodeId LabelledForest::add_node(NodeId parent, ForestLabel l) {
    nodes_.push_back(ForestNode{parent, std::move(l)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

std::vector<NodeId> LabelledForest::roots() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].parent == kNoNode) out.push_back(i);
    return out;
}

std::vector<NodeId> LabelledForest::children(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].parent == id) out.push_back(i);
    return out;
}

std::vector<NodeId> LabelledForest::all_nodes() const {
    std::vector<NodeId> out(nodes_.size());
    for (NodeId i = 0; i < nodes_.size(); ++i) out[i] = i;
    return out;
}

std::vector<NodeId> LabelledForest::path_to(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId cur = id; cur != kNoNode; cur = nodes_[cur].parent) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<NodeId> LabelledForest::graft(const LabelledForest& other, NodeId under) {
    std::vector<NodeId> map(other.size());
    for (NodeId i = 0; i < other.size(); ++i) {
        const auto& n = other.nodes_[i];
        NodeId parent = n.parent == kNoNode ? under : map[n.parent];
        map[i] = add_node(parent, n.label);
    }
    return map;
}

namespace {

std::string label_key(const ForestLabel& l) {
    if (std::holds_alternative<NameLabel>(l)) {
        const auto& nl = std::get<NameLabel>(l);
        return "n:" + std::to_string(nl.name.uid) + ":" + nl.base;
    }
    return "s:" + rigid_seq_key(*std::get<SeqPtr>(l));
}

} // namespace

std::string LabelledForest::iso_key() const {
    std::vector<std::vector<NodeId>> kids(nodes_.size());
    std::vector<NodeId> rts;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].parent == kNoNode) rts.push_back(i);
        else kids[nodes_[i].parent].push_back(i);
    }
    std::function<std::string(NodeId)> enc = [&](NodeId id) {
        std::vector<std::string> ck;
        ck.reserve(kids[id].size());
        for (NodeId c : kids[id]) ck.push_back(enc(c));
        std::sort(ck.begin(), ck.end());
        std::string out = label_key(nodes_[id].label) + "(";
        for (const auto& k : ck) out += k + ",";
        out += ")";
        return out;
    };
    std::vector<std::string> rk;
    rk.reserve(rts.size());
    for (NodeId r : rts) rk.push_back(enc(r));
    std::sort(rk.begin(), rk.end());
    std::string out = "F[";
    for (const auto& k : rk) out += k + ";";
    out += "]";
    return out;
}

namespace {

void forest_of_rec(const Term& t, LabelledForest& f, NodeId parent) {
    switch (t->kind) {
    case TermKind::Nil:
        return;
    case TermKind::Restrict: {
        if (!t->annot)
            throw TypeError("active restriction '" + t->binder.ident + "' lacks an annotation");
        NodeId id = f.add_name_node(parent, t->binder, t->annot->base, t->annot);
        forest_of_rec(t->body, f, id);
        return;
    }
    case TermKind::Par:
        forest_of_rec(t->left, f, parent);
        forest_of_rec(t->right, f, parent);
        return;
    case TermKind::Choice:
    case TermKind::Repl: {
        NormalForm nf = normalize(t); // a sequential term is a single active
        f.add_seq_node(parent, nf.actives.at(0));
        return;
    }
    }
}

} // namespace

LabelledForest forest_of(const Term& t) {
    LabelledForest f;
    forest_of_rec(t, f, kNoNode);
    return f;
}

LabelledForest forest_of(const NormalForm& nf) {
    LabelledForest f;
    NodeId parent = kNoNode;
    if (!nf.actives.empty()) {
        for (const auto& r : nf.restrictions) {
            if (!r.type)
                throw TypeError("active restriction '" + r.name.ident + "' lacks an annotation");
            parent = f.add_name_node(parent, r.name, r.type->base, r.type);
        }
    }
    for (const auto& a : nf.actives) f.add_seq_node(parent, a);
    return f;
}

std::set<std::vector<std::string>> traces(const LabelledForest& f) {
    std::set<std::vector<std::string>> out;
    for (NodeId id : f.all_nodes()) {
        std::vector<std::string> tr;
        for (NodeId n : f.path_to(id)) {
            if (f.is_name(n))
                tr.push_back("(" + f.name_label(n).name.ident + "," + f.name_label(n).base + ")");
            else
                tr.push_back(rigid_seq_key(*f.seq_label(n)));
        }
        out.insert(std::move(tr));
    }
    return out;
}

std::size_t height(const LabelledForest& f) {
    std::size_t best = 0;
    for (NodeId id : f.all_nodes()) best = std::max(best, f.path_to(id).size());
    return best;
}

std::size_t height_nu(const LabelledForest& f) {
    std::size_t best = 0;
    for (NodeId id : f.all_nodes()) {
        std::size_t names = 0;
        for (NodeId n : f.path_to(id))
            if (f.is_name(n)) ++names;
        best = std::max(best, names);
    }
    return best;
}

void check_reconstruct_conditions(const LabelledForest& f) {
    for (NodeId id : f.all_nodes()) {
        if (!f.is_name(id) && !f.children(id).empty())
            throw ReconstructError(1, "sequential label on a non-leaf node");
    }
    std::set<std::uint64_t> seen;
    for (NodeId id : f.all_nodes()) {
        if (f.is_name(id) && !seen.insert(f.name_label(id).name.uid).second)
            throw ReconstructError(2,
                                   "name '" + f.name_label(id).name.ident + "' labels two nodes");
    }
    std::set<Name> restricted;
    for (NodeId id : f.all_nodes())
        if (f.is_name(id)) restricted.insert(f.name_label(id).name);
    for (NodeId id : f.all_nodes()) {
        if (f.is_name(id)) continue;
        std::set<Name> on_path;
        for (NodeId n : f.path_to(id))
            if (f.is_name(n)) on_path.insert(f.name_label(n).name);
        for (const auto& x : free_names(*f.seq_label(id))) {
            if (restricted.count(x) && !on_path.count(x))
                throw ReconstructError(3, "leaf uses restricted name '" + x.ident +
                                              "' that is not on its path");
        }
    }
}

Term reconstruct(const LabelledForest& f) {
    check_reconstruct_conditions(f);
    std::vector<Term> leaves;
    for (NodeId id : f.all_nodes())
        if (!f.is_name(id)) leaves.push_back(seq_to_term(*f.seq_label(id)));
    if (leaves.empty()) return mk_nil();
    Term body = leaves.back();
    for (std::size_t i = leaves.size() - 1; i-- > 0;) body = mk_par(leaves[i], body);
    std::vector<NodeId> names;
    for (NodeId id : f.all_nodes())
        if (f.is_name(id)) names.push_back(id);
    for (std::size_t i = names.size(); i-- > 0;) {
        const auto& nl = f.name_label(names[i]);
        body = mk_restrict(nl.name, nl.type, body);
    }
    return body;
}

LabelledForest insert_forest(const LabelledForest& host, const std::vector<NodeId>& path,
                             const LabelledForest& addition, const BaseForest& T) {
    LabelledForest out = host; // node ids preserved
    auto map = out.graft(addition, kNoNode);
    for (NodeId r : addition.roots()) {
        if (!addition.is_name(r))
            throw TypeError("insert_forest: addition root is not name-labelled");
        const auto& rl = addition.name_label(r);
        NodeId attach = kNoNode;
        for (NodeId m : path) { // path runs root to node, so the last hit is deepest
            if (host.is_name(m) && T.less(host.name_label(m).base, rl.base)) attach = m;
        }
        out.reparent(map[r], attach);
    }
    return out;
}

namespace {

struct NfView {
    std::vector<Restriction> restrictions;
    std::vector<SeqPtr> actives;
};

NfView absorbed_view(const NormalForm& nf) {
    NfView v;
    v.restrictions = nf.restrictions;
    std::set<std::string> repl;
    for (const auto& a : nf.actives)
        if (a->replicated) repl.insert(rigid_seq_key(SeqTerm{false, a->branches}));
    for (const auto& a : nf.actives) {
        if (!a->replicated && repl.count(rigid_seq_key(*a))) continue;
        v.actives.push_back(a);
    }
    return v;
}

// All parent assignments over n nodes (value n = root); cyclic ones are
// filtered by the caller.
void enum_parents(std::size_t n, std::vector<std::size_t>& parent, std::size_t i, bool& stop,
                  const std::function<void()>& fn) {
    if (stop) return;
    if (i == n) {
        fn();
        return;
    }
    for (std::size_t p = 0; p <= n; ++p) {
        if (p == i) continue;
        parent[i] = p;
        enum_parents(n, parent, i + 1, stop, fn);
        if (stop) return;
    }
    parent[i] = n;
}

bool acyclic(const std::vector<std::size_t>& parent) {
    const std::size_t n = parent.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cur = i, steps = 0;
        while (cur != n) {
            cur = parent[cur];
            if (++steps > n) return false;
        }
    }
    return true;
}

} // namespace

bool enumerate_forests_visit(const Term& t, const EnumerateOptions& opts,
                             const std::function<bool(const LabelledForest&)>& visit) {
    NormalForm nf = normalize(t);
    NfView v = absorbed_view(nf);
    if (v.restrictions.size() > opts.max_restrictions)
        throw SizeBoundExceeded("enumerate_forests: restriction bound exceeded");

    const std::size_t n = v.restrictions.size();
    const std::size_t m = v.actives.size();

    std::set<std::uint64_t> restricted;
    for (const auto& r : v.restrictions) restricted.insert(r.name.uid);
    std::vector<std::set<std::uint64_t>> used(m);
    std::set<std::uint64_t> used_any;
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& fn : free_names(*v.actives[i]))
            if (restricted.count(fn.uid)) {
                used[i].insert(fn.uid);
                used_any.insert(fn.uid);
            }
    }

    std::vector<std::size_t> unused_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!used_any.count(v.restrictions[i].name.uid)) unused_idx.push_back(i);

    std::size_t produced = 0;
    bool stop = false;

    for (std::size_t dropmask = 0; dropmask < (std::size_t{1} << unused_idx.size()) && !stop;
         ++dropmask) {
        std::vector<char> dropped(n, 0);
        for (std::size_t k = 0; k < unused_idx.size(); ++k)
            if (dropmask & (std::size_t{1} << k)) dropped[unused_idx[k]] = 1;
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < n; ++i)
            if (!dropped[i]) kept.push_back(i);

        const std::size_t kn = kept.size();
        std::vector<std::size_t> parent(kn, kn);
        auto per_forest = [&]() {
            if (!acyclic(parent)) return;
            std::vector<std::set<std::uint64_t>> anc(kn);
            for (std::size_t i = 0; i < kn; ++i) {
                std::size_t cur = i, steps = 0;
                while (cur != kn && steps++ <= kn) {
                    anc[i].insert(v.restrictions[kept[cur]].name.uid);
                    cur = parent[cur];
                }
            }
            std::vector<std::vector<std::size_t>> cands(m);
            for (std::size_t l = 0; l < m; ++l) {
                if (used[l].empty()) cands[l].push_back(kn); // own root
                for (std::size_t i = 0; i < kn; ++i) {
                    bool ok = true;
                    for (auto u : used[l])
                        if (!anc[i].count(u)) { ok = false; break; }
                    if (ok) cands[l].push_back(i);
                }
                if (cands[l].empty()) return;
            }
            std::vector<std::size_t> sel(m, 0);
            while (!stop) {
                if (++produced > opts.max_forests)
                    throw SizeBoundExceeded("enumerate_forests: forest budget exceeded");
                LabelledForest f;
                std::vector<NodeId> ids(kn);
                std::vector<char> emitted(kn, 0);
                std::size_t done = 0;
                while (done < kn) {
                    for (std::size_t i = 0; i < kn; ++i) {
                        if (emitted[i]) continue;
                        if (parent[i] != kn && !emitted[parent[i]]) continue;
                        const auto& r = v.restrictions[kept[i]];
                        ids[i] = f.add_name_node(parent[i] == kn ? kNoNode : ids[parent[i]],
                                                 r.name, r.type ? r.type->base : "", r.type);
                        emitted[i] = 1;
                        ++done;
                    }
                }
                for (std::size_t l = 0; l < m; ++l) {
                    std::size_t target = cands[l][sel[l]];
                    f.add_seq_node(target == kn ? kNoNode : ids[target], v.actives[l]);
                }
                if (visit(f)) { stop = true; return; }
                std::size_t pos = 0;
                while (pos < m) {
                    if (++sel[pos] < cands[pos].size()) break;
                    sel[pos] = 0;
                    ++pos;
                }
                if (pos == m) break;
            }
        };
        enum_parents(kn, parent, 0, stop, per_forest);
    }
    return stop;
}

std::vector<LabelledForest> enumerate_forests(const Term& t, const EnumerateOptions& opts) {
    std::vector<LabelledForest> out;
    std::set<std::string> seen;
    enumerate_forests_visit(t, opts, [&](const LabelledForest& f) {
        if (seen.insert(f.iso_key()).second) out.push_back(f);
        return false;
    });
    return out;
}

namespace {

// depth of the component decomposition: leaves grouped by shared names in S,
// each component rooted at its cheapest member.
struct DepthSolver {
    std::vector<std::vector<std::size_t>> leaf_used; // name indices per leaf
    std::size_t n = 0;
    std::map<std::uint64_t, std::size_t> memo; // bitmask -> component depth

    std::size_t depth_of(std::uint64_t S) {
        if (S == 0) return 0;
        // split leaves into components connected via names in S
        std::vector<std::uint64_t> comp_masks;
        std::vector<std::uint64_t> leaf_masks;
        for (const auto& lu : leaf_used) {
            std::uint64_t mask = 0;
            for (auto i : lu)
                if (S & (std::uint64_t{1} << i)) mask |= std::uint64_t{1} << i;
            if (mask) leaf_masks.push_back(mask);
        }
        // union-find over masks
        for (auto mask : leaf_masks) {
            std::uint64_t merged = mask;
            std::vector<std::uint64_t> rest;
            for (auto& cm : comp_masks) {
                if (cm & merged) merged |= cm;
                else rest.push_back(cm);
            }
            rest.push_back(merged);
            comp_masks.swap(rest);
        }
        std::size_t best = 0;
        for (auto cm : comp_masks) best = std::max(best, component(cm));
        return best;
    }

    std::size_t component(std::uint64_t C) {
        if (C == 0) return 0;
        auto it = memo.find(C);
        if (it != memo.end()) return it->second;
        std::size_t best = static_cast<std::size_t>(-1);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t bit = std::uint64_t{1} << i;
            if (!(C & bit)) continue;
            best = std::min(best, 1 + depth_of(C & ~bit));
        }
        memo[C] = best;
        return best;
    }
};

} // namespace

std::size_t depth_exact(const Term& t, std::size_t max_restrictions) {
    NormalForm nf = normalize(t);
    NfView v = absorbed_view(nf);

    std::set<std::uint64_t> restricted;
    for (const auto& r : v.restrictions) restricted.insert(r.name.uid);
    std::set<std::uint64_t> used_any;
    std::vector<std::set<std::uint64_t>> used;
    for (const auto& a : v.actives) {
        std::set<std::uint64_t> u;
        for (const auto& fn : free_names(*a))
            if (restricted.count(fn.uid)) u.insert(fn.uid);
        used_any.insert(u.begin(), u.end());
        if (!u.empty()) used.push_back(std::move(u));
    }
    std::vector<std::uint64_t> nodes(used_any.begin(), used_any.end());
    if (nodes.size() > max_restrictions || nodes.size() > 63)
        throw SizeBoundExceeded("depth_exact: restriction bound exceeded");
    if (nodes.empty()) return 0;

    std::map<std::uint64_t, std::size_t> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i) idx[nodes[i]] = i;
    DepthSolver solver;
    solver.n = nodes.size();
    for (const auto& u : used) {
        std::vector<std::size_t> lu;
        for (auto x : u) lu.push_back(idx[x]);
        solver.leaf_used.push_back(std::move(lu));
    }
    return solver.depth_of((std::uint64_t{1} << nodes.size()) - 1);
}

std::size_t nest_nu(const Term& t) {
    switch (t->kind) {
    case TermKind::Nil: return 0;
    case TermKind::Restrict: return 1 + nest_nu(t->body);
    case TermKind::Par: return std::max(nest_nu(t->left), nest_nu(t->right));
    case TermKind::Choice:
    case TermKind::Repl: return 0;
    }
    return 0;
}

} // namespace pihier
