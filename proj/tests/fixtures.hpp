#ifndef PIHIER_TESTS_FIXTURES_HPP
#define PIHIER_TESTS_FIXTURES_HPP

#include <string>

#include "pihier/parser.hpp"
#include "pihier/term.hpp"
#include "pihier/types.hpp"

namespace fixtures {

// server listening on s, clients on mailboxes m created via c
inline const char* kServerClient =
    "new s:S[M[D]]. new c:C[M[D]]. ("
    "!s(x).new d:D. x<d>.0"
    " | !c(m).(s<m>.0 | m(y).c<m>.0)"
    " | !tau.new m:M[D]. c<m>.0)";

inline pihier::Term server_client() { return pihier::parse_term(kServerClient); }

inline const char* kServerClientBare =
    "new s. new c. ("
    "!s(x).new d. x<d>.0"
    " | !c(m).(s<m>.0 | m(y).c<m>.0)"
    " | !tau.new m. c<m>.0)";

inline pihier::Term server_client_bare() { return pihier::parse_term(kServerClientBare); }

// tau-free truncation with two pre-created client mailboxes
inline const char* kServerClient2 =
    "new s:S[M[D]]. new c:C[M[D]]. new m1:M[D]. new m2:M[D]. ("
    "!s(x).new d:D. x<d>.0"
    " | !c(m).(s<m>.0 | m(y).c<m>.0)"
    " | c<m1>.0 | c<m2>.0)";

inline pihier::Term server_client2() { return pihier::parse_term(kServerClient2); }

inline pihier::BaseForest scmd() {
    return pihier::BaseForest::chain({"S", "C", "M", "D"});
}

// stack pushing fresh names, unbounded in depth
inline const char* kStack =
    "new s. new n. new v. new a. ("
    "!s(x).new b.(v<b>.n<x>.0 | s<b>.0)"
    " | s<a>.0)";

inline pihier::Term stack() { return pihier::parse_term(kStack); }

inline const char* kStackAnnotated =
    "new s:TS[TA]. new n:TN[TA]. new v:TV[TA]. new a:TA. ("
    "!s(x).new b:TA.(v<b>.n<x>.0 | s<b>.0)"
    " | s<a>.0)";

inline pihier::Term stack_annotated() { return pihier::parse_term(kStackAnnotated); }

// nu a b c.(a(x) | b(x) | c(x) | a<b>) with A1..A4 in that order
inline const char* kTiedTo =
    "new a:A[B[L]]. new b:B[L]. new c:CC[L2]. (a(x).0 | b(x).0 | c(x).0 | a<b>.0)";

inline pihier::Term tied_to_example() { return pihier::parse_term(kTiedTo); }

inline pihier::BaseForest tied_forest_ab() {
    pihier::BaseForest T;
    T.add_node("A");
    T.add_node("B");
    T.add_node("CC");
    T.add_node("L");
    T.add_node("L2");
    T.add_edge("A", "B");
    T.add_edge("B", "L");
    T.add_edge("CC", "L2");
    return T;
}

inline pihier::BaseForest tied_forest_ba() {
    pihier::BaseForest T;
    T.add_node("A");
    T.add_node("B");
    T.add_node("CC");
    T.add_node("L");
    T.add_node("L2");
    T.add_edge("B", "A");
    T.add_edge("A", "L");
    T.add_edge("CC", "L2");
    return T;
}

} // namespace fixtures

#endif
