#ifndef PIHIER_NAMES_HPP
#define PIHIER_NAMES_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>

namespace pihier {

// A channel/message name. Two names are the same name iff their uids are
// equal; the identifier is what the user wrote and is kept for printing.
struct Name {
    std::string ident;
    std::uint64_t uid = 0;

    bool operator==(const Name& o) const { return uid == o.uid; }
    bool operator!=(const Name& o) const { return uid != o.uid; }
    bool operator<(const Name& o) const { return uid < o.uid; }
};

// Process-wide uid supply. Fresh names never collide with parsed ones.
std::uint64_t next_name_uid();

inline Name fresh_name(const std::string& ident) {
    return Name{ident, next_name_uid()};
}

struct NameHash {
    std::size_t operator()(const Name& n) const {
        return std::hash<std::uint64_t>{}(n.uid);
    }
};

} // namespace pihier

#endif
