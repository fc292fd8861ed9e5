#include "pihier/canonical.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace pihier {

namespace {

using TokenMap = std::map<std::uint64_t, std::string>;

struct Ctx {
    std::size_t budget = 0;
    std::size_t used = 0;
    std::map<const SeqTerm*, std::set<Name>> fn_cache;
    std::map<std::string, std::string> key_cache;

    const std::set<Name>& fn(const SeqPtr& s) {
        auto it = fn_cache.find(s.get());
        if (it == fn_cache.end()) it = fn_cache.emplace(s.get(), free_names(*s)).first;
        return it->second;
    }
};

std::string token_of(const Name& n, const TokenMap& tok) {
    auto it = tok.find(n.uid);
    if (it != tok.end()) return it->second;
    return "f:" + n.ident;
}

std::string type_str(const std::optional<ChanType>& t) {
    return t ? t->to_string() : "-";
}

std::string nf_key(const NormalForm& nf, const TokenMap& tok, int depth, Ctx& ctx);

// Input binders are tokenised by nesting depth ("i<d>"), which is unique
// along any scope path; restriction tokens are "v<d>_<k>".
std::string seq_key_raw(const SeqTerm& s, const TokenMap& tok, int depth, Ctx& ctx) {
    std::vector<std::string> branch_keys;
    branch_keys.reserve(s.branches.size());
    for (const auto& b : s.branches) {
        std::ostringstream os;
        switch (b.prefix.kind) {
        case PrefixKind::Tau:
            os << "t.";
            break;
        case PrefixKind::Output:
            os << "o" << token_of(b.prefix.channel, tok) << "<"
               << token_of(b.prefix.object, tok) << ">.";
            break;
        case PrefixKind::Input:
            os << "i" << token_of(b.prefix.channel, tok) << "(.)";
            break;
        }
        if (b.prefix.kind == PrefixKind::Input) {
            TokenMap inner = tok;
            inner[b.prefix.object.uid] = "i" + std::to_string(depth);
            os << nf_key(b.cont, inner, depth + 1, ctx);
        } else {
            os << nf_key(b.cont, tok, depth + 1, ctx);
        }
        branch_keys.push_back(os.str());
    }
    std::sort(branch_keys.begin(), branch_keys.end());
    std::ostringstream os;
    os << (s.replicated ? "!" : "") << "[";
    for (const auto& k : branch_keys) os << k << ";";
    os << "]";
    return os.str();
}

std::string seq_key(const SeqPtr& s, const TokenMap& tok, int depth, Ctx& ctx) {
    // cache on the resolved tokens of the term's free names
    std::ostringstream ck;
    ck << s.get() << "/" << depth;
    for (const auto& n : ctx.fn(s)) ck << "\x02" << token_of(n, tok);
    std::string ckey = ck.str();
    auto it = ctx.key_cache.find(ckey);
    if (it != ctx.key_cache.end()) return it->second;
    std::string k = seq_key_raw(*s, tok, depth, ctx);
    ctx.key_cache.emplace(std::move(ckey), k);
    return k;
}

// Hidden input_depth threading: nf_key passes depth for restriction tokens,
// and input binders use a per-branch counter encoded in the token map above.
// (Input binders along one path get i0, i1, ... via nested calls.)

struct Level {
    std::vector<Restriction> restrictions;
    std::vector<SeqPtr> actives;
};

// replication absorption + unused-restriction dropping, in place
Level absorbed(const NormalForm& nf, const TokenMap& tok, int depth, Ctx& ctx) {
    Level out;
    out.restrictions = nf.restrictions;

    TokenMap rigid = tok;
    for (const auto& r : nf.restrictions) rigid[r.name.uid] = "u" + std::to_string(r.name.uid);

    std::set<std::string> repl_bodies;
    for (const auto& a : nf.actives) {
        if (!a->replicated) continue;
        SeqTerm plain{false, a->branches};
        repl_bodies.insert(seq_key_raw(plain, rigid, depth, ctx));
    }
    for (const auto& a : nf.actives) {
        if (!a->replicated && !repl_bodies.empty()) {
            std::string k = seq_key_raw(*a, rigid, depth, ctx);
            if (repl_bodies.count(k)) continue; // absorbed into !M
        }
        out.actives.push_back(a);
    }

    std::set<std::uint64_t> used;
    for (const auto& a : out.actives)
        for (const auto& n : ctx.fn(a)) used.insert(n.uid);
    std::erase_if(out.restrictions,
                  [&](const Restriction& r) { return !used.count(r.name.uid); });
    return out;
}

std::string finish_key(const Level& lv, const std::vector<std::size_t>& order,
                       const TokenMap& base, int depth, Ctx& ctx) {
    TokenMap tok = base;
    std::ostringstream nu;
    nu << "nu[";
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& r = lv.restrictions[order[k]];
        tok[r.name.uid] = "v" + std::to_string(depth) + "_" + std::to_string(k);
        nu << type_str(r.type) << ";";
    }
    nu << "]";
    std::vector<std::string> parts;
    parts.reserve(lv.actives.size());
    for (const auto& a : lv.actives) parts.push_back(seq_key(a, tok, depth, ctx));
    std::sort(parts.begin(), parts.end());
    std::ostringstream os;
    os << nu.str() << "{";
    for (const auto& p : parts) os << p << "|";
    os << "}";
    return os.str();
}

// Individualisation search: repeatedly pick the candidate restriction whose
// trial signature is minimal. Ties are taken as interchangeable when no
// active mentions two tied candidates (symmetric parallel copies); otherwise
// every tied candidate is branched on, bounded by the ordering budget.
std::string search_order(const Level& lv, std::vector<std::size_t> order,
                         std::vector<bool> taken, const TokenMap& base, int depth, Ctx& ctx) {
    const std::size_t n = lv.restrictions.size();
    while (order.size() < n) {
        TokenMap tok = base;
        for (std::size_t k = 0; k < order.size(); ++k)
            tok[lv.restrictions[order[k]].name.uid] =
                "v" + std::to_string(depth) + "_" + std::to_string(k);
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) tok[lv.restrictions[i].name.uid] = "?";

        std::string next_tok = "v" + std::to_string(depth) + "_" + std::to_string(order.size());
        std::vector<std::size_t> cands;
        std::string best_sig;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            TokenMap trial = tok;
            trial[lv.restrictions[i].name.uid] = next_tok;
            std::vector<std::string> parts;
            parts.reserve(lv.actives.size());
            for (const auto& a : lv.actives) parts.push_back(seq_key(a, trial, depth, ctx));
            std::sort(parts.begin(), parts.end());
            std::string sig = "ty:" + type_str(lv.restrictions[i].type) + "|";
            for (const auto& p : parts) sig += p;
            if (cands.empty() || sig < best_sig) {
                best_sig = std::move(sig);
                cands.assign(1, i);
            } else if (sig == best_sig) {
                cands.push_back(i);
            }
        }

        bool interchangeable = true;
        if (cands.size() > 1) {
            std::set<std::uint64_t> cand_uids;
            for (auto i : cands) cand_uids.insert(lv.restrictions[i].name.uid);
            for (const auto& a : lv.actives) {
                std::size_t hits = 0;
                for (const auto& fn : ctx.fn(a))
                    if (cand_uids.count(fn.uid)) ++hits;
                if (hits > 1) { interchangeable = false; break; }
            }
        }

        if (cands.size() == 1 || interchangeable) {
            order.push_back(cands.front());
            taken[cands.front()] = true;
            continue;
        }

        std::string best;
        for (auto i : cands) {
            if (++ctx.used > ctx.budget)
                throw SizeBoundExceeded("binder canonicalization budget exceeded");
            auto o2 = order;
            auto t2 = taken;
            o2.push_back(i);
            t2[i] = true;
            std::string k = search_order(lv, std::move(o2), std::move(t2), base, depth, ctx);
            if (best.empty() || k < best) best = std::move(k);
        }
        return best;
    }
    return finish_key(lv, order, base, depth, ctx);
}

std::string nf_key(const NormalForm& nf, const TokenMap& tok, int depth, Ctx& ctx) {
    Level lv = absorbed(nf, tok, depth, ctx);
    if (lv.restrictions.empty()) {
        std::vector<std::string> parts;
        parts.reserve(lv.actives.size());
        for (const auto& a : lv.actives) parts.push_back(seq_key(a, tok, depth, ctx));
        std::sort(parts.begin(), parts.end());
        std::ostringstream os;
        os << "{";
        for (const auto& p : parts) os << p << "|";
        os << "}";
        return os.str();
    }
    return search_order(lv, {}, std::vector<bool>(lv.restrictions.size(), false), tok, depth,
                        ctx);
}

} // namespace

CanonicalKey canonical(const NormalForm& nf, const CanonicalOptions& opts) {
    Ctx ctx;
    ctx.budget = opts.max_orderings;
    return nf_key(nf, {}, 0, ctx);
}

CanonicalKey canonical(const Term& t, const CanonicalOptions& opts) {
    return canonical(normalize(t), opts);
}

bool congruent(const Term& p, const Term& q, const CanonicalOptions& opts) {
    return canonical(p, opts) == canonical(q, opts);
}

std::string rigid_seq_key(const SeqTerm& s) {
    Ctx ctx;
    ctx.budget = 1;
    TokenMap rigid;
    for (const auto& n : free_names(s)) rigid[n.uid] = "u" + std::to_string(n.uid);
    return seq_key_raw(s, rigid, 0, ctx);
}

} // namespace pihier
