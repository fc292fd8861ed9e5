#include <doctest.h>

#include "fixtures.hpp"
#include "pihier/canonical.hpp"
#include "pihier/generator.hpp"
#include "pihier/parser.hpp"
#include "pihier/printer.hpp"

using namespace pihier;

TEST_CASE("parse basics") {
    CHECK(parse_term("0")->kind == TermKind::Nil);
    Term p = parse_term("(0 | 0)");
    CHECK(p->kind == TermKind::Par);
    CHECK(print_term(p) == "0 | 0");

    Term sc = fixtures::server_client();
    REQUIRE(sc->kind == TermKind::Restrict);
    CHECK(sc->binder.ident == "s");
    REQUIRE(sc->annot.has_value());
    CHECK(sc->annot->to_string() == "S[M[D]]");
    REQUIRE(sc->body->kind == TermKind::Restrict);
    // three parallel replicated components
    const Term& body = sc->body->body;
    REQUIRE(body->kind == TermKind::Par);
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_term("new a. a<a"), ParseError);
    CHECK_THROWS_AS(parse_term("a<b>"), ParseError);
    CHECK_THROWS_AS(parse_term("new x:A:B. 0"), ParseError);
    try {
        parse_term("new a. a<a");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.column > 1);
    }
}

TEST_CASE("replication collapses !0 at parse level") {
    CHECK(parse_term("!0")->kind == TermKind::Nil);
    Term t = parse_term("!0 + tau.0");
    REQUIRE(t->kind == TermKind::Choice);
    CHECK(t->branches.size() == 1);
    CHECK(t->branches[0].prefix.kind == PrefixKind::Tau);
}

TEST_CASE("prefix binds tighter than + which binds tighter than |") {
    Term t = parse_term("a(x).0 + b<c>.0 | tau.0");
    REQUIRE(t->kind == TermKind::Par);
    CHECK(t->left->kind == TermKind::Choice);
    CHECK(t->left->branches.size() == 2);
    CHECK(t->right->branches.size() == 1);

    // new extends maximally right at the par level
    Term u = parse_term("tau.0 | new x. a<x>.0 | b(y).0");
    REQUIRE(u->kind == TermKind::Par);
    CHECK(u->right->kind == TermKind::Restrict);
    CHECK(u->right->body->kind == TermKind::Par);
}

TEST_CASE("print/parse round trip is stable") {
    auto roundtrip = [](const std::string& text) {
        Term t = parse_term(text);
        std::string s1 = print_term(t);
        Term t2 = parse_term(s1);
        CHECK(print_term(t2) == s1);
        CHECK(canonical(t2) == canonical(t));
    };
    roundtrip("0");
    roundtrip(fixtures::kServerClient);
    roundtrip(fixtures::kStack);
    roundtrip("new x. (x<y>.0 | x(z).(tau.0 + z<y>.0))");
}

TEST_CASE("round trip on a generated corpus") {
    TermGen gen(42);
    BaseForest T = gen.chain_forest(3);
    for (int i = 0; i < 60; ++i) {
        Term t = i % 2 == 0 ? gen.annotated_term(T, 4) : gen.closed_term(8);
        std::string s1 = print_term(t);
        Term t2 = parse_term(s1);
        CAPTURE(s1);
        CHECK(print_term(t2) == s1);
        CHECK(canonical(t2) == canonical(t));
    }
}

TEST_CASE("name_sets") {
    {
        NameSets ns = name_sets(parse_term("a<b>.0"));
        CHECK(ns.free.size() == 2);
        CHECK(ns.bound.empty());
        CHECK(ns.active_restrictions.empty());
    }
    {
        Term t = parse_term("new x.(x<y>.0)");
        NameSets ns = name_sets(t);
        CHECK(ns.free.size() == 1);
        CHECK(ns.free.begin()->ident == "y");
        CHECK(ns.bound.size() == 1);
        CHECK(ns.active_restrictions.size() == 1);
        CHECK(ns.active_restrictions.begin()->ident == "x");
    }
    {
        NameSets ns = name_sets(fixtures::server_client());
        CHECK(ns.free.empty());
        CHECK(ns.active_restrictions.size() == 2);
        std::set<std::string> idents;
        for (const auto& n : ns.active_restrictions) idents.insert(n.ident);
        CHECK(idents == std::set<std::string>{"s", "c"});
    }
    {
        // restrictions under a prefix are not active
        NameSets ns = name_sets(parse_term("a(x).new d. x<d>.0"));
        CHECK(ns.active_restrictions.empty());
        CHECK(ns.bound.size() == 2);
    }
}

TEST_CASE("substitute") {
    Term t = parse_term("x<c>.0");
    Name x, b, c;
    for (const auto& n : free_names(t)) {
        if (n.ident == "x") x = n;
        if (n.ident == "c") c = n;
    }
    b = fresh_name("b");
    Term r = substitute(t, x, b);
    CHECK(print_term(r) == "b<c>.0");

    Term u = parse_term("new d. x<d>.0");
    Name ux;
    for (const auto& n : free_names(u))
        if (n.ident == "x") ux = n;
    Name m = fresh_name("m");
    CHECK(print_term(substitute(u, ux, m)) == "new d. m<d>.0");

    // identity when the name is not free
    Name z = fresh_name("z"), w = fresh_name("w");
    CHECK(substitute(t, z, w) == t);

    // inverse property when b is fresh
    Term back = substitute(substitute(t, x, b), b, x);
    CHECK(alpha_equal(back, t));
}

TEST_CASE("ensure_name_uniq") {
    Term r = parse_term("new x. x<u>.0");
    Term dup = mk_par(r, r); // the same binder uid twice
    CHECK_FALSE(satisfies_name_uniq(dup));
    Term fixed = ensure_name_uniq(dup);
    CHECK(satisfies_name_uniq(fixed));
    CHECK(canonical(fixed) == canonical(dup));

    // binder apart from subject
    Term t = parse_term("x(x).0");
    CHECK(satisfies_name_uniq(t));
    REQUIRE(t->branches.size() == 1);
    CHECK(t->branches[0].prefix.channel.uid != t->branches[0].prefix.object.uid);

    // idempotent up to alpha
    Term once = ensure_name_uniq(dup);
    Term twice = ensure_name_uniq(once);
    CHECK(print_term(once) == print_term(twice));
}

TEST_CASE("printing disambiguates colliding identifiers") {
    Term r1 = mk_restrict(fresh_name("x"), std::nullopt,
                          mk_prefix(Prefix::output(fresh_name("u"), fresh_name("u")), mk_nil()));
    // two distinct binders named x
    Name x1 = fresh_name("x"), x2 = fresh_name("x");
    Term t = mk_par(mk_restrict(x1, std::nullopt, mk_prefix(Prefix::output(x1, x1), mk_nil())),
                    mk_restrict(x2, std::nullopt, mk_prefix(Prefix::output(x2, x2), mk_nil())));
    std::string s = print_term(t);
    Term t2 = parse_term(s);
    CHECK(canonical(t2) == canonical(t));
    (void)r1;
}
