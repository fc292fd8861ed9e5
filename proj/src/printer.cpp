#include "pihier/printer.hpp"

#include <map>
#include <set>
#include <sstream>

namespace pihier {

namespace {

bool reserved(const std::string& id) { return id == "new" || id == "tau"; }

// One printable identifier per distinct name. Free names keep theirs;
// binders that collide get a numeric suffix.
std::map<std::uint64_t, std::string> display_names(const Term& t) {
    NameSets ns = name_sets(t);
    std::map<std::uint64_t, std::string> out;
    std::set<std::string> taken;
    for (const auto& n : ns.free) {
        out[n.uid] = n.ident;
        taken.insert(n.ident);
    }
    for (const auto& n : ns.bound) {
        std::string id = n.ident;
        if (id.empty()) id = "x";
        if (reserved(id)) id += "_";
        if (taken.count(id) || reserved(n.ident)) {
            int k = 1;
            std::string cand;
            do {
                cand = id + "_" + std::to_string(k++);
            } while (taken.count(cand));
            id = cand;
        }
        out[n.uid] = id;
        taken.insert(id);
    }
    return out;
}

struct Printer {
    const std::map<std::uint64_t, std::string>& disp;
    bool annots;

    std::string name(const Name& n) const {
        auto it = disp.find(n.uid);
        return it != disp.end() ? it->second : n.ident;
    }

    void par(const Term& t, std::ostringstream& os) const {
        if (t->kind == TermKind::Par) {
            par(t->left, os);
            os << " | ";
            par(t->right, os);
            return;
        }
        item(t, os);
    }

    // A par operand; restrictions get parentheses so they do not swallow
    // their siblings on reparse.
    void item(const Term& t, std::ostringstream& os) const {
        if (t->kind == TermKind::Restrict) {
            os << "(";
            restrict_chain(t, os);
            os << ")";
            return;
        }
        choice(t, os);
    }

    void restrict_chain(const Term& t, std::ostringstream& os) const {
        os << "new " << name(t->binder);
        if (annots && t->annot) os << ":" << t->annot->to_string();
        os << ". ";
        if (t->body->kind == TermKind::Restrict) restrict_chain(t->body, os);
        else par(t->body, os);
    }

    void choice(const Term& t, std::ostringstream& os) const {
        switch (t->kind) {
        case TermKind::Nil:
            os << "0";
            return;
        case TermKind::Choice: {
            bool first = true;
            for (const auto& b : t->branches) {
                if (!first) os << " + ";
                first = false;
                branch(b, os);
            }
            return;
        }
        case TermKind::Repl:
            os << "!";
            if (t->inner->branches.size() > 1) {
                os << "(";
                choice(t->inner, os);
                os << ")";
            } else {
                choice(t->inner, os);
            }
            return;
        default:
            os << "(";
            par(t, os);
            os << ")";
            return;
        }
    }

    void branch(const Branch& b, std::ostringstream& os) const {
        switch (b.prefix.kind) {
        case PrefixKind::Tau: os << "tau"; break;
        case PrefixKind::Input:
            os << name(b.prefix.channel) << "(" << name(b.prefix.object) << ")";
            break;
        case PrefixKind::Output:
            os << name(b.prefix.channel) << "<" << name(b.prefix.object) << ">";
            break;
        }
        os << ".";
        cont(b.cont, os);
    }

    // Continuations stop at '+' and '|'; anything wider is parenthesised.
    void cont(const Term& t, std::ostringstream& os) const {
        switch (t->kind) {
        case TermKind::Nil:
            os << "0";
            return;
        case TermKind::Choice:
            if (t->branches.size() == 1) {
                branch(t->branches[0], os);
                return;
            }
            os << "(";
            choice(t, os);
            os << ")";
            return;
        case TermKind::Repl:
            choice(t, os);
            return;
        case TermKind::Restrict:
            os << "new " << name(t->binder);
            if (annots && t->annot) os << ":" << t->annot->to_string();
            os << ". ";
            cont(t->body, os);
            return;
        case TermKind::Par:
            os << "(";
            par(t, os);
            os << ")";
            return;
        }
    }
};

} // namespace

std::string print_term(const Term& t, const PrintOptions& opts) {
    auto disp = display_names(t);
    Printer p{disp, opts.annotations};
    std::ostringstream os;
    if (t->kind == TermKind::Restrict) p.restrict_chain(t, os);
    else p.par(t, os);
    return os.str();
}

} // namespace pihier
