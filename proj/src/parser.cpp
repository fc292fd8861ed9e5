#include "pihier/parser.hpp"

#include <cctype>
#include <map>
#include <vector>

namespace pihier {

namespace {

enum class Tok { Ident, Zero, New, Tau, LParen, RParen, Lt, Gt, Bar, Plus, Bang, Dot, Colon,
                 LBracket, RBracket, End };

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

struct Lexer {
    const std::string& src;
    std::size_t pos = 0;
    int line = 1, col = 1;
    Token cur;

    explicit Lexer(const std::string& s) : src(s) { advance(); }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, cur.line, cur.col); }

    void advance() {
        skip_ws();
        cur.line = line;
        cur.col = col;
        if (pos >= src.size()) { cur.kind = Tok::End; cur.text = "<end>"; return; }
        char c = src[pos];
        auto one = [&](Tok k) { cur.kind = k; cur.text = std::string(1, c); bump(); };
        switch (c) {
        case '(': one(Tok::LParen); return;
        case ')': one(Tok::RParen); return;
        case '<': one(Tok::Lt); return;
        case '>': one(Tok::Gt); return;
        case '|': one(Tok::Bar); return;
        case '+': one(Tok::Plus); return;
        case '!': one(Tok::Bang); return;
        case '.': one(Tok::Dot); return;
        case ':': one(Tok::Colon); return;
        case '[': one(Tok::LBracket); return;
        case ']': one(Tok::RBracket); return;
        default: break;
        }
        if (c == '0') { one(Tok::Zero); return; }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string id;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_' ||
                    src[pos] == '\'')) {
                id += src[pos];
                bump();
            }
            cur.text = id;
            if (id == "new") cur.kind = Tok::New;
            else if (id == "tau") cur.kind = Tok::Tau;
            else cur.kind = Tok::Ident;
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }

    void bump() {
        if (src[pos] == '\n') { ++line; col = 1; }
        else ++col;
        ++pos;
    }

    void skip_ws() {
        while (pos < src.size()) {
            char c = src[pos];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { bump(); continue; }
            if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
                while (pos < src.size() && src[pos] != '\n') bump();
                continue;
            }
            break;
        }
    }
};

struct Parser {
    Lexer lx;
    // lexical scope: identifier -> binder stack
    std::map<std::string, std::vector<Name>> scope;
    // free names: one Name per identifier
    std::map<std::string, Name> frees;

    explicit Parser(const std::string& s) : lx(s) {}

    Token& tok() { return lx.cur; }
    void expect(Tok k, const std::string& what) {
        if (tok().kind != k) lx.fail("expected " + what + ", got '" + tok().text + "'");
        lx.advance();
    }

    Name lookup(const std::string& id) {
        auto it = scope.find(id);
        if (it != scope.end() && !it->second.empty()) return it->second.back();
        auto fit = frees.find(id);
        if (fit != frees.end()) return fit->second;
        Name n = fresh_name(id);
        frees.emplace(id, n);
        return n;
    }

    Name push_binder(const std::string& id) {
        Name n = fresh_name(id);
        scope[id].push_back(n);
        return n;
    }

    void pop_binder(const std::string& id) { scope[id].pop_back(); }

    std::string ident() {
        if (tok().kind != Tok::Ident) lx.fail("expected a name, got '" + tok().text + "'");
        std::string id = tok().text;
        lx.advance();
        return id;
    }

    ChanType chan_type() {
        std::string base = ident();
        if (tok().kind == Tok::LBracket) {
            lx.advance();
            ChanType inner = chan_type();
            expect(Tok::RBracket, "']'");
            return ChanType::chan(base, std::move(inner));
        }
        return ChanType::bare(base);
    }

    // par := item ('|' item)*
    Term parse_par() {
        Term t = parse_par_item(true);
        while (tok().kind == Tok::Bar) {
            lx.advance();
            Term r = parse_par_item(true);
            t = mk_par(t, r);
        }
        return t;
    }

    // allow_new: restrictions extend maximally right at this level
    Term parse_par_item(bool allow_new) {
        if (tok().kind == Tok::New && allow_new) return parse_new(/*wide=*/true);
        return parse_choice();
    }

    Term parse_new(bool wide) {
        expect(Tok::New, "'new'");
        std::string id = ident();
        std::optional<ChanType> annot;
        if (tok().kind == Tok::Colon) {
            lx.advance();
            annot = chan_type();
            if (tok().kind == Tok::Colon) lx.fail("duplicate annotation on binder '" + id + "'");
        }
        expect(Tok::Dot, "'.' after binder");
        Name n = push_binder(id);
        Term body = wide ? parse_par() : parse_cont();
        pop_binder(id);
        return mk_restrict(n, std::move(annot), body);
    }

    // choice := catom ('+' catom)*; operands are merged, 0 is the unit
    Term parse_choice() {
        Term first = parse_catom();
        if (tok().kind != Tok::Plus) return first;
        std::vector<Branch> branches;
        append_operand(branches, first);
        while (tok().kind == Tok::Plus) {
            lx.advance();
            append_operand(branches, parse_catom());
        }
        return mk_choice(std::move(branches));
    }

    void append_operand(std::vector<Branch>& acc, const Term& t) {
        if (t->kind == TermKind::Nil) return;
        if (t->kind == TermKind::Choice) {
            acc.insert(acc.end(), t->branches.begin(), t->branches.end());
            return;
        }
        lx.fail("choice operand must be 0 or a prefixed term");
    }

    // catom := '0' | '(' par ')' | '!' catom | prefix '.' cont
    Term parse_catom() {
        switch (tok().kind) {
        case Tok::Zero:
            lx.advance();
            return mk_nil();
        case Tok::LParen: {
            lx.advance();
            Term t = parse_par();
            expect(Tok::RParen, "')'");
            return t;
        }
        case Tok::Bang: {
            lx.advance();
            Term inner = parse_catom();
            if (inner->kind != TermKind::Nil && inner->kind != TermKind::Choice)
                lx.fail("replication applies to choices only");
            return mk_repl(inner);
        }
        case Tok::Tau: {
            lx.advance();
            expect(Tok::Dot, "'.' after tau");
            Term cont = parse_cont();
            return mk_prefix(Prefix::tau(), cont);
        }
        case Tok::Ident: {
            std::string chan = ident();
            if (tok().kind == Tok::LParen) { // input
                lx.advance();
                std::string bind = ident();
                expect(Tok::RParen, "')' after input binder");
                expect(Tok::Dot, "'.' after input prefix");
                Name cn = lookup(chan);
                Name bn = push_binder(bind);
                Term cont = parse_cont();
                pop_binder(bind);
                return mk_prefix(Prefix::input(cn, bn), cont);
            }
            if (tok().kind == Tok::Lt) { // output
                lx.advance();
                std::string payload = ident();
                expect(Tok::Gt, "'>' after output payload");
                expect(Tok::Dot, "'.' after output prefix");
                Name cn = lookup(chan);
                Name pn = lookup(payload);
                Term cont = parse_cont();
                return mk_prefix(Prefix::output(cn, pn), cont);
            }
            lx.fail("expected '(' or '<' after channel name '" + chan + "'");
        }
        default:
            lx.fail("expected a process term, got '" + tok().text + "'");
        }
        return mk_nil(); // unreachable
    }

    // Prefix continuations bind tighter than '+': a 'new' here extends only
    // to the end of the continuation.
    Term parse_cont() {
        if (tok().kind == Tok::New) return parse_new(/*wide=*/false);
        return parse_catom();
    }
};

} // namespace

Term parse_term(const std::string& text) {
    Parser p(text);
    Term t = p.parse_par();
    if (p.tok().kind != Tok::End)
        p.lx.fail("trailing input '" + p.tok().text + "'");
    return t;
}

ChanType parse_chan_type(const std::string& text) {
    Parser p(text);
    ChanType t = p.chan_type();
    if (p.tok().kind != Tok::End)
        p.lx.fail("trailing input '" + p.tok().text + "'");
    return t;
}

} // namespace pihier
