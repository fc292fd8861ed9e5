#ifndef PIHIER_PARSER_HPP
#define PIHIER_PARSER_HPP

#include <stdexcept>
#include <string>

#include "pihier/term.hpp"

namespace pihier {

struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
          line(line_), column(col_) {}
};

// Concrete grammar:
//   0 | new x[:TY].P | P|P | M+M | a(x).P | a<b>.P | tau.P | !M | (P)
// Prefix binds tighter than +, which binds tighter than |.
// `new` extends maximally right within its context; parentheses override.
// Type syntax: TY := base | base[TY].
Term parse_term(const std::string& text);

ChanType parse_chan_type(const std::string& text);

} // namespace pihier

#endif
