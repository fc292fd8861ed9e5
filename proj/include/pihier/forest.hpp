#ifndef PIHIER_FOREST_HPP
#define PIHIER_FOREST_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "pihier/normal_form.hpp"

namespace pihier {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct NameLabel {
    Name name;
    BaseTypeId base;                // empty when the restriction is unannotated
    std::optional<ChanType> type;   // full annotation, kept for reconstruction
};

using ForestLabel = std::variant<NameLabel, SeqPtr>;

struct ForestNode {
    NodeId parent = kNoNode;
    ForestLabel label;
};

// Forest with labels in (Name x BaseType) + SequentialTerm. Compared up to
// node-set isomorphism respecting parent and labels.
class LabelledForest {
public:
    NodeId add_name_node(NodeId parent, Name n, BaseTypeId base,
                         std::optional<ChanType> type = std::nullopt);
    NodeId add_seq_node(NodeId parent, SeqPtr s);
    NodeId add_node(NodeId parent, ForestLabel l);

    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }
    const ForestNode& node(NodeId id) const { return nodes_[id]; }
    std::vector<NodeId> roots() const;
    std::vector<NodeId> children(NodeId id) const;
    std::vector<NodeId> all_nodes() const;

    bool is_name(NodeId id) const { return std::holds_alternative<NameLabel>(nodes_[id].label); }
    const NameLabel& name_label(NodeId id) const { return std::get<NameLabel>(nodes_[id].label); }
    const SeqPtr& seq_label(NodeId id) const { return std::get<SeqPtr>(nodes_[id].label); }

    // Root-to-node path, inclusive.
    std::vector<NodeId> path_to(NodeId id) const;

    // Grafts `other` into this forest; roots of `other` become children of
    // `under` (or roots when under == kNoNode). Returns old->new node map.
    std::vector<NodeId> graft(const LabelledForest& other, NodeId under);

    void reparent(NodeId node, NodeId new_parent) { nodes_[node].parent = new_parent; }

    // Isomorphism-invariant encoding; equal keys iff isomorphic.
    std::string iso_key() const;
    bool iso_equal(const LabelledForest& other) const { return iso_key() == other.iso_key(); }

private:
    std::vector<ForestNode> nodes_;
};

// forest(Q): every active restriction becomes a name node, every active
// sequential subterm a leaf. Throws on unannotated active restrictions.
LabelledForest forest_of(const Term& t);
LabelledForest forest_of(const NormalForm& nf);

// Traces as label-key sequences (for tests).
std::set<std::vector<std::string>> traces(const LabelledForest& f);
std::size_t height(const LabelledForest& f);
// Longest path made of name-labelled nodes.
std::size_t height_nu(const LabelledForest& f);

struct ReconstructError : std::runtime_error {
    int condition; // 1: sequential label not a leaf, 2: duplicate name, 3: scoping
    ReconstructError(int cond, const std::string& msg)
        : std::runtime_error(msg), condition(cond) {}
};

// Rebuilds the term a forest represents; throws ReconstructError if one of the
// three side conditions fails.
Term reconstruct(const LabelledForest& f);
void check_reconstruct_conditions(const LabelledForest& f); // throws

// ins(phi, p, rho): each root of `addition` (labelled (y,t_y)) hangs off the
// deepest node of `path` whose base type is < t_y, or becomes a root.
LabelledForest insert_forest(const LabelledForest& host,
                             const std::vector<NodeId>& path,
                             const LabelledForest& addition,
                             const BaseForest& T);

struct EnumerateOptions {
    std::size_t max_restrictions = 6;
    std::size_t max_forests = 2000000;
};

// Brute-force oracle for F[[P]] up to isomorphism: all nestings of the
// normal form's restrictions and leaf placements satisfying the
// reconstruction conditions, plus dropping of unused restrictions.
std::vector<LabelledForest> enumerate_forests(const Term& t, const EnumerateOptions& opts = {});

// Streaming variant; visit returning true stops the enumeration (the return
// value says whether it was stopped). Isomorphic duplicates may repeat.
bool enumerate_forests_visit(const Term& t, const EnumerateOptions& opts,
                             const std::function<bool(const LabelledForest&)>& visit);

// min over F[[P]] of height_nu. Computed by the component decomposition of
// the linked-to relation (min over root choices, max over components), which
// the tests cross-check against the enumeration oracle.
std::size_t depth_exact(const Term& t, std::size_t max_restrictions = 8);

// Syntactic nesting of restrictions (an upper bound on depth).
std::size_t nest_nu(const Term& t);

} // namespace pihier

#endif
