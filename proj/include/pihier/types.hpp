#ifndef PIHIER_TYPES_HPP
#define PIHIER_TYPES_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pihier/names.hpp"

namespace pihier {

using BaseTypeId = std::string;

// Channel type t or t[ty]: a missing payload encodes the bare base type.
struct ChanType {
    BaseTypeId base;
    std::shared_ptr<const ChanType> payload; // null = bare base type

    static ChanType bare(BaseTypeId b) { return ChanType{std::move(b), nullptr}; }
    static ChanType chan(BaseTypeId b, ChanType inner) {
        return ChanType{std::move(b), std::make_shared<const ChanType>(std::move(inner))};
    }

    bool operator==(const ChanType& o) const;
    bool operator!=(const ChanType& o) const { return !(*this == o); }

    std::string to_string() const;
};

// Finite forest of base types (T, <|). less/leq are the transitive and
// reflexive-transitive closures of the parent relation.
class BaseForest {
public:
    BaseForest() = default;

    void add_node(const BaseTypeId& n);
    // parent <| child
    void add_edge(const BaseTypeId& parent, const BaseTypeId& child);

    bool has_node(const BaseTypeId& n) const { return nodes_.count(n) != 0; }
    const std::set<BaseTypeId>& nodes() const { return nodes_; }
    std::optional<BaseTypeId> parent(const BaseTypeId& n) const;

    bool less(const BaseTypeId& a, const BaseTypeId& b) const;    // a < b
    bool leq(const BaseTypeId& a, const BaseTypeId& b) const;     // a <= b

    // Length of the longest root-to-leaf chain (number of nodes on it).
    std::size_t height() const;

    // Chain forest t1 <| t2 <| ... <| tn.
    static BaseForest chain(const std::vector<BaseTypeId>& ns);

    void validate() const; // throws on cycles or dangling parents

private:
    std::set<BaseTypeId> nodes_;
    std::map<BaseTypeId, BaseTypeId> parent_;
};

// Finite map Name -> ChanType (the typing environment Gamma).
class TypeEnv {
public:
    TypeEnv() = default;

    bool contains(const Name& n) const { return map_.count(n) != 0; }
    const ChanType* find(const Name& n) const;
    void bind(const Name& n, ChanType t);

    // Union; the domains must be disjoint.
    TypeEnv merged(const TypeEnv& other) const;

    const std::map<Name, ChanType>& assignments() const { return map_; }
    std::size_t size() const { return map_.size(); }

private:
    std::map<Name, ChanType> map_;
};

struct TypeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pihier

#endif
