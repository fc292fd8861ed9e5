#ifndef PIHIER_PRINTER_HPP
#define PIHIER_PRINTER_HPP

#include <string>

#include "pihier/term.hpp"

namespace pihier {

struct PrintOptions {
    bool annotations = true;
};

// Round-trip guarantee: parse_term(print_term(t)) is alpha-equivalent to t.
// Identifiers that collide between distinct names get a numeric suffix.
std::string print_term(const Term& t, const PrintOptions& opts = {});

} // namespace pihier

#endif
