#ifndef PIHIER_BISIM_HPP
#define PIHIER_BISIM_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace pihier {

struct BisimResult {
    bool bisimilar = false;
    bool budget_exceeded = false;
    std::string violated_clause; // "seed", "A" or "B"
    std::vector<std::string> trace;
    std::size_t pairs_explored = 0;
};

// Bounded bisimulation game: the seed relation refined for `rounds`
// alternations from the initial pair. A system exposes:
//   using State = ...;
//   State initial();
//   std::vector<State> successors(const State&);
//   std::string key(const State&);
template <class SysL, class SysR, class Seed>
BisimResult bounded_bisim(SysL& lhs, SysR& rhs, std::size_t rounds, Seed&& seed,
                          std::size_t pair_budget = 200000) {
    using L = typename SysL::State;
    using R = typename SysR::State;

    BisimResult res;
    std::map<std::string, bool> memo;
    std::map<std::string, std::vector<L>> succ_l;
    std::map<std::string, std::vector<R>> succ_r;

    const auto succs_of_l = [&](const L& s) -> const std::vector<L>& {
        auto k = lhs.key(s);
        auto it = succ_l.find(k);
        if (it == succ_l.end()) it = succ_l.emplace(k, lhs.successors(s)).first;
        return it->second;
    };
    const auto succs_of_r = [&](const R& t) -> const std::vector<R>& {
        auto k = rhs.key(t);
        auto it = succ_r.find(k);
        if (it == succ_r.end()) it = succ_r.emplace(k, rhs.successors(t)).first;
        return it->second;
    };

    // related(s, t, k): seed holds and clauses (A)/(B) hold for k rounds.
    auto related = [&](auto&& self, const L& s, const R& t, std::size_t k,
                       std::vector<std::string>* trace) -> bool {
        std::string mk = lhs.key(s) + "\x01" + rhs.key(t) + "\x01" + std::to_string(k);
        auto it = memo.find(mk);
        if (it != memo.end()) return it->second;
        if (++res.pairs_explored > pair_budget) {
            res.budget_exceeded = true;
            return false;
        }
        if (!seed(s, t)) {
            if (trace) {
                res.violated_clause = "seed";
                trace->push_back("seed fails: " + lhs.key(s) + " !~ " + rhs.key(t));
            }
            memo[mk] = false;
            return false;
        }
        bool ok = true;
        if (k > 0) {
            for (const L& s2 : succs_of_l(s)) {
                bool matched = false;
                for (const R& t2 : succs_of_r(t)) {
                    if (self(self, s2, t2, k - 1, nullptr)) { matched = true; break; }
                }
                if (!matched) {
                    if (trace) {
                        res.violated_clause = "A";
                        trace->push_back("clause A: move " + lhs.key(s2) + " unmatched from (" +
                                         lhs.key(s) + ", " + rhs.key(t) + ") at round " +
                                         std::to_string(k));
                    }
                    ok = false;
                    break;
                }
            }
            if (ok) {
                for (const R& t2 : succs_of_r(t)) {
                    bool matched = false;
                    for (const L& s2 : succs_of_l(s)) {
                        if (self(self, s2, t2, k - 1, nullptr)) { matched = true; break; }
                    }
                    if (!matched) {
                        if (trace) {
                            res.violated_clause = "B";
                            trace->push_back("clause B: move " + rhs.key(t2) + " unmatched from (" +
                                             lhs.key(s) + ", " + rhs.key(t) + ") at round " +
                                             std::to_string(k));
                        }
                        ok = false;
                        break;
                    }
                }
            }
        }
        if (res.budget_exceeded) return false;
        memo[mk] = ok;
        return ok;
    };

    L s0 = lhs.initial();
    R t0 = rhs.initial();
    res.bisimilar = related(related, s0, t0, rounds, &res.trace);
    if (res.budget_exceeded) res.bisimilar = false;
    return res;
}

} // namespace pihier

#endif
