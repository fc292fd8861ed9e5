#include "pihier/types.hpp"

#include <algorithm>

namespace pihier {

bool ChanType::operator==(const ChanType& o) const {
    if (base != o.base) return false;
    if (!payload && !o.payload) return true;
    if (!payload || !o.payload) return false;
    return *payload == *o.payload;
}

std::string ChanType::to_string() const {
    if (!payload) return base;
    return base + "[" + payload->to_string() + "]";
}

void BaseForest::add_node(const BaseTypeId& n) { nodes_.insert(n); }

void BaseForest::add_edge(const BaseTypeId& parent, const BaseTypeId& child) {
    nodes_.insert(parent);
    nodes_.insert(child);
    auto [it, inserted] = parent_.emplace(child, parent);
    if (!inserted && it->second != parent)
        throw TypeError("base type '" + child + "' has two parents");
}

std::optional<BaseTypeId> BaseForest::parent(const BaseTypeId& n) const {
    auto it = parent_.find(n);
    if (it == parent_.end()) return std::nullopt;
    return it->second;
}

bool BaseForest::less(const BaseTypeId& a, const BaseTypeId& b) const {
    // a < b iff a is a proper ancestor of b
    auto cur = parent_.find(b);
    std::size_t guard = 0;
    while (cur != parent_.end()) {
        if (cur->second == a) return true;
        if (++guard > parent_.size()) throw TypeError("base forest has a cycle");
        cur = parent_.find(cur->second);
    }
    return false;
}

bool BaseForest::leq(const BaseTypeId& a, const BaseTypeId& b) const {
    return a == b || less(a, b);
}

std::size_t BaseForest::height() const {
    std::size_t best = 0;
    for (const auto& n : nodes_) {
        std::size_t h = 1;
        auto cur = parent_.find(n);
        while (cur != parent_.end()) {
            ++h;
            if (h > nodes_.size() + 1) throw TypeError("base forest has a cycle");
            cur = parent_.find(cur->second);
        }
        best = std::max(best, h);
    }
    return best;
}

BaseForest BaseForest::chain(const std::vector<BaseTypeId>& ns) {
    BaseForest f;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        f.add_node(ns[i]);
        if (i > 0) f.add_edge(ns[i - 1], ns[i]);
    }
    return f;
}

void BaseForest::validate() const {
    for (const auto& [child, parent] : parent_) {
        if (!nodes_.count(child) || !nodes_.count(parent))
            throw TypeError("base forest edge mentions unknown node");
    }
    for (const auto& n : nodes_) {
        std::size_t steps = 0;
        auto cur = parent_.find(n);
        while (cur != parent_.end()) {
            if (++steps > nodes_.size()) throw TypeError("base forest has a cycle");
            cur = parent_.find(cur->second);
        }
    }
}

const ChanType* TypeEnv::find(const Name& n) const {
    auto it = map_.find(n);
    return it == map_.end() ? nullptr : &it->second;
}

void TypeEnv::bind(const Name& n, ChanType t) {
    auto [it, inserted] = map_.emplace(n, std::move(t));
    if (!inserted) throw TypeError("environment already binds '" + n.ident + "'");
}

TypeEnv TypeEnv::merged(const TypeEnv& other) const {
    TypeEnv out = *this;
    for (const auto& [n, t] : other.map_) out.bind(n, t);
    return out;
}

} // namespace pihier
