#include "histodyn/model_file.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "histodyn/integrators.hpp"
#include "histodyn/numfmt.hpp"

namespace histodyn {

ModelFileError::ModelFileError(const std::string& msg, int l, int c)
    : std::runtime_error(l > 0 ? msg + " (line " + std::to_string(l) + ", column " + std::to_string(c) + ")" : msg),
      line(l),
      column(c) {}

namespace {

struct Scope {
    int n = 1;
    const HMapContext* ctx = nullptr;
    std::string field = "C", momentum = "P";
    std::string arg;             // bound variable inside a function body
    bool fields = true;          // C, P, vol, dx
    bool coordinates = false;    // t, x1 ...
    bool allow_d = false;
    std::string where;           // for messages
};

struct Tok {
    enum Kind { num, ident, sym, end } kind = end;
    std::string text;
    double value = 0.0;
    int col = 0;  // 1-based column in the file line
};

class ExprParser {
public:
    ExprParser(const std::string& src, int line, int col0, const Scope& sc) : sc_(sc), line_(line) {
        std::size_t i = 0;
        while (i < src.size()) {
            char c = src[i];
            int col = col0 + static_cast<int>(i) + 1;
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* b = src.c_str() + i;
                char* e = nullptr;
                double v = std::strtod(b, &e);
                if (e == b) throw ModelFileError("malformed number", line_, col);
                toks_.push_back({Tok::num, std::string(b, static_cast<const char*>(e)), v, col});
                i += static_cast<std::size_t>(e - b);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i;
                while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
                toks_.push_back({Tok::ident, src.substr(i, j - i), 0.0, col});
                i = j;
            } else if (std::string("+-*/^(),'").find(c) != std::string::npos) {
                toks_.push_back({Tok::sym, std::string(1, c), 0.0, col});
                ++i;
            } else {
                throw ModelFileError(std::string("unexpected character '") + c + "'", line_, col);
            }
        }
        toks_.push_back({Tok::end, "", 0.0, col0 + static_cast<int>(src.size()) + 1});
    }

    Expr parse() {
        if (peek().kind == Tok::end) throw ModelFileError("empty expression", line_, peek().col);
        Expr e = expr();
        if (peek().kind != Tok::end) throw ModelFileError("unexpected '" + peek().text + "'", line_, peek().col);
        return e;
    }

private:
    const Tok& peek() const { return toks_[pos_]; }
    bool is(const char* s) const { return peek().kind == Tok::sym && peek().text == s; }
    Tok take() { return toks_[pos_++]; }
    void expect(const char* s) {
        if (!is(s)) throw ModelFileError(std::string("expected '") + s + "'", line_, peek().col);
        ++pos_;
    }

    Expr at(Expr e, int col) const {
        auto n = std::make_shared<ExprNode>(*e);
        n->line = line_;
        n->column = col;
        return n;
    }

    Expr expr() {
        int col = peek().col;
        std::vector<Expr> terms{term()};
        while (is("+") || is("-")) {
            bool minus = take().text == "-";
            Expr t = term();
            terms.push_back(minus ? ex::neg(t) : t);
        }
        return terms.size() == 1 ? terms[0] : at(ex::sum(std::move(terms)), col);
    }

    Expr term() {
        int col = peek().col;
        Expr e = unary();
        while (is("*") || is("/")) {
            bool div = take().text == "/";
            Expr r = unary();
            e = at(ex::wedge(e, div ? ex::pow(r, -1.0) : r), col);
        }
        return e;
    }

    Expr unary() {
        if (is("-")) {
            int col = take().col;
            Expr e = unary();
            if (e->op == Op::Const) return at(ex::constant(-e->value), col);
            return at(ex::neg(e), col);
        }
        return power();
    }

    double exponent(const Expr& e, int col) const {
        if (e->op != Op::Const) throw ModelFileError("exponent must be a number", line_, col);
        return e->value;
    }

    Expr power() {
        int col = peek().col;
        Expr base = primary();
        if (is("^")) {
            take();
            int ecol = peek().col;
            return at(ex::pow(base, exponent(unary(), ecol)), col);
        }
        return base;
    }

    Expr primary() {
        const Tok& t = peek();
        if (t.kind == Tok::num) {
            take();
            return at(ex::constant(t.value), t.col);
        }
        if (is("(")) {
            take();
            Expr e = expr();
            expect(")");
            return e;
        }
        if (t.kind != Tok::ident) throw ModelFileError(t.kind == Tok::end ? "unexpected end of expression" : "unexpected '" + t.text + "'", line_, t.col);
        Tok id = take();
        int order = 0;
        while (is("'")) {
            take();
            ++order;
        }
        if (is("(")) return call(id, order);
        if (order) throw ModelFileError("derivative mark without a call", line_, id.col);
        return name(id);
    }

    Expr call(const Tok& id, int order) {
        take();
        std::vector<std::pair<Expr, int>> args;
        if (!is(")")) {
            do {
                int col = peek().col;
                args.push_back({expr(), col});
            } while (is(",") && (take(), true));
        }
        expect(")");
        const std::string& f = id.text;
        auto arity = [&](std::size_t k) {
            if (args.size() != k)
                throw ModelFileError(f + " takes " + std::to_string(k) + " argument" + (k > 1 ? "s" : ""), line_, id.col);
        };
        if (order && (f == "wedge" || f == "star" || f == "d" || f == "pow"))
            throw ModelFileError("derivative mark on " + f, line_, id.col);
        if (f == "wedge") {
            arity(2);
            return at(ex::wedge(args[0].first, args[1].first), id.col);
        }
        if (f == "star") {
            arity(1);
            return at(ex::star(args[0].first), id.col);
        }
        if (f == "d") {
            arity(1);
            if (!sc_.allow_d) throw ModelFileError("d(.) is only allowed in Lagrangians", line_, id.col);
            if (args[0].first->op != Op::FieldC) throw ModelFileError("d(.) applies to the field only", line_, args[0].second);
            return at(ex::d(args[0].first), id.col);
        }
        if (f == "pow") {
            arity(2);
            return at(ex::pow(args[0].first, exponent(args[1].first, args[1].second)), id.col);
        }
        if (is_builtin_function(f) || (sc_.ctx && sc_.ctx->functions.count(f))) {
            arity(1);
            return at(ex::fun(f, args[0].first, order), id.col);
        }
        throw ModelFileError("unknown function '" + f + "'", line_, id.col);
    }

    static int trailing_index(const std::string& s, const std::string& prefix) {
        if (s.size() <= prefix.size() || s.compare(0, prefix.size(), prefix) != 0) return -1;
        for (std::size_t i = prefix.size(); i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return -1;
        return std::stoi(s.substr(prefix.size()));
    }

    Expr name(const Tok& id) {
        const std::string& s = id.text;
        if (!sc_.arg.empty() && s == sc_.arg) return at(ex::arg(), id.col);
        bool is_field = s == "C" || s == "P" || s == sc_.field || s == sc_.momentum || s == "vol" ||
                        trailing_index(s, "dx") >= 0;
        if (is_field) {
            if (!sc_.fields) throw ModelFileError("'" + s + "' is not allowed in " + sc_.where, line_, id.col);
            if (s == "C" || s == sc_.field) return at(ex::C(), id.col);
            if (s == "P" || s == sc_.momentum) return at(ex::P(), id.col);
            if (s == "vol") return at(ex::vol(), id.col);
            int mu = trailing_index(s, "dx");
            if (mu >= sc_.n) throw ModelFileError("'" + s + "' exceeds the dimension " + std::to_string(sc_.n), line_, id.col);
            return at(ex::dx(mu), id.col);
        }
        int mu = -1;
        if (s == "t") mu = 0;
        else if (s == "x") mu = 1;
        else if (s == "y") mu = 2;
        else if (s == "z") mu = 3;
        else if (trailing_index(s, "x") >= 1) mu = trailing_index(s, "x");
        if (mu >= 0 && !(sc_.ctx && sc_.ctx->params.count(s))) {
            if (!sc_.coordinates)
                throw ModelFileError("explicit coordinate dependence ('" + s + "') is not supported in " + sc_.where, line_, id.col);
            if (mu >= sc_.n) throw ModelFileError("coordinate '" + s + "' exceeds the dimension " + std::to_string(sc_.n), line_, id.col);
            return at(ex::X(mu), id.col);
        }
        if (sc_.ctx && sc_.ctx->params.count(s)) return at(ex::param(s), id.col);
        if (s == "pi") return at(ex::constant(M_PI), id.col);
        throw ModelFileError("unknown identifier '" + s + "'", line_, id.col);
    }

    const Scope& sc_;
    int line_;
    std::vector<Tok> toks_;
    std::size_t pos_ = 0;
};

struct Entry {
    std::string key, value;
    int line = 0, key_col = 0, value_col = 0;
    bool quoted = false;
};

using Sections = std::map<std::string, std::vector<Entry>>;

// Position of the offending node when the symbolic layer knows it, else of the entry.
ModelFileError positioned(const HMapError& ex, const Entry& e) {
    if (ex.line > 0) return ModelFileError(ex.bare, ex.line, ex.column);
    return ModelFileError(ex.what(), e.line, e.value_col + 1);
}

const std::set<std::string>& known_sections() {
    static const std::set<std::string> s{"model", "field", "domain", "params", "potential", "equations", "simulation", "initial"};
    return s;
}

std::string trim(const std::string& s, std::size_t& lead) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    lead = b;
    return s.substr(b, e - b);
}

Sections split_sections(const std::string& text) {
    Sections out;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        // strip comments outside quotes
        bool q = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '"') q = !q;
            if (raw[i] == '#' && !q) {
                raw.resize(i);
                break;
            }
        }
        std::size_t lead;
        std::string s = trim(raw, lead);
        if (s.empty()) continue;
        int col = static_cast<int>(lead) + 1;
        if (s.front() == '[') {
            if (s.back() != ']') throw ModelFileError("unterminated section header", line, col);
            current = s.substr(1, s.size() - 2);
            if (!known_sections().count(current)) throw ModelFileError("unknown section [" + current + "]", line, col);
            if (out.count(current)) throw ModelFileError("section [" + current + "] appears twice", line, col);
            out[current];
            continue;
        }
        if (current.empty()) throw ModelFileError("entry outside of a section", line, col);
        std::size_t eq = raw.find('=');
        if (eq == std::string::npos) throw ModelFileError("expected 'key = value'", line, col);
        Entry e;
        e.line = line;
        std::size_t kl, vl;
        e.key = trim(raw.substr(0, eq), kl);
        e.key_col = static_cast<int>(kl) + 1;
        e.value = trim(raw.substr(eq + 1), vl);
        e.value_col = static_cast<int>(eq + 1 + vl);
        if (e.key.empty()) throw ModelFileError("missing key", line, col);
        if (e.value.empty()) throw ModelFileError("missing value for '" + e.key + "'", line, e.value_col + 1);
        if (e.value.front() == '"') {
            if (e.value.size() < 2 || e.value.back() != '"') throw ModelFileError("unterminated string", line, e.value_col + 1);
            e.value = e.value.substr(1, e.value.size() - 2);
            e.value_col += 1;
            e.quoted = true;
        }
        for (auto& other : out[current])
            if (other.key == e.key) throw ModelFileError("duplicate key '" + e.key + "'", line, e.key_col);
        out[current].push_back(e);
    }
    return out;
}

class Builder {
public:
    explicit Builder(Sections s) : sec_(std::move(s)) {}

    ModelSpec build() {
        ModelSpec m;
        for (auto& e : entries("model")) {
            if (e.key == "name") m.name = e.value;
            else unknown("model", e);
        }
        int rank = 0;
        for (auto& e : entries("field")) {
            if (e.key == "name") m.field_name = identifier(e);
            else if (e.key == "momentum") m.momentum_name = identifier(e);
            else if (e.key == "rank") rank = integer(e);
            else unknown("field", e);
        }
        if (m.field_name == m.momentum_name) throw ModelFileError("field and momentum share the name '" + m.field_name + "'");
        domain(m, rank);
        for (auto& e : entries("params")) {
            static const std::set<std::string> reserved{"C", "P", "vol", "pi", "t", "x", "y", "z"};
            if (!valid_identifier(e.key) || reserved.count(e.key) || e.key == m.field_name || e.key == m.momentum_name ||
                e.key.rfind("dx", 0) == 0)
                throw ModelFileError("bad parameter name '" + e.key + "'", e.line, e.key_col);
            m.ctx.params[e.key] = number(e, m);
        }
        potentials(m);
        equations(m);
        simulation(m);
        initial(m);
        return m;
    }

private:
    std::vector<Entry> entries(const std::string& s) const {
        auto it = sec_.find(s);
        return it == sec_.end() ? std::vector<Entry>{} : it->second;
    }

    [[noreturn]] static void unknown(const std::string& s, const Entry& e) {
        throw ModelFileError("unknown key '" + e.key + "' in [" + s + "]", e.line, e.key_col);
    }

    static bool valid_identifier(const std::string& s) {
        if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
        for (char c : s)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
        return true;
    }

    static std::string identifier(const Entry& e) {
        if (!valid_identifier(e.value)) throw ModelFileError("bad name '" + e.value + "'", e.line, e.value_col + 1);
        return e.value;
    }

    static Expr expression(const std::string& src, int line, int col0, const Scope& sc) {
        return ExprParser(src, line, col0, sc).parse();
    }

    static double number_text(const std::string& text, int line, int col0, const ModelSpec& m) {
        Scope sc;
        sc.n = m.ctx.n;
        sc.ctx = &m.ctx;
        sc.fields = false;
        sc.where = "a numeric value";
        Expr e = expression(text, line, col0, sc);
        try {
            return evaluate_scalar(e, {}, m.ctx);
        } catch (const std::exception& ex) {
            throw ModelFileError(ex.what(), line, col0 + 1);
        }
    }

    static double number(const Entry& e, const ModelSpec& m) { return number_text(e.value, e.line, e.value_col, m); }

    static int integer(const Entry& e, const ModelSpec& m = {}) {
        double v = number(e, m);
        if (v != std::floor(v) || std::abs(v) > 2e9) throw ModelFileError("'" + e.key + "' must be an integer", e.line, e.value_col + 1);
        return static_cast<int>(v);
    }

    struct Item {
        std::string text;
        int col0;
    };
    static std::vector<Item> list(const Entry& e) {
        std::vector<Item> out;
        std::string v = e.value;
        int base = e.value_col;
        if (!v.empty() && v.front() == '[') {
            if (v.back() != ']') throw ModelFileError("unterminated list", e.line, e.value_col + 1);
            v = v.substr(1, v.size() - 2);
            base += 1;
        }
        std::size_t start = 0;
        while (true) {
            std::size_t comma = v.find(',', start);
            std::string piece = v.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            std::size_t lead;
            std::string t = trim(piece, lead);
            if (t.empty()) throw ModelFileError("empty list item", e.line, base + static_cast<int>(start) + 1);
            out.push_back({t, base + static_cast<int>(start + lead)});
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }

    void domain(ModelSpec& m, int rank) {
        int n = 0;
        std::vector<int> cells;
        std::vector<double> lengths;
        bool has_cells = false;
        for (auto& e : entries("domain")) {
            if (e.key == "dimension") n = integer(e);
            else if (e.key == "signature") {
                for (auto& it : list(e)) {
                    if (it.text == "+" || it.text == "+1" || it.text == "1") m.ctx.signature.push_back(1);
                    else if (it.text == "-" || it.text == "-1") m.ctx.signature.push_back(-1);
                    else throw ModelFileError("signature entries are + or -", e.line, it.col0 + 1);
                }
            } else if (e.key == "boundary") {
                if (e.value != "periodic") throw ModelFileError("only periodic domains are supported", e.line, e.value_col + 1);
            } else if (e.key == "cells" || e.key == "length") {
                // evaluated below, once the dimension is known
            } else {
                unknown("domain", e);
            }
        }
        if (n < 1) throw ModelFileError("[domain] needs dimension >= 1");
        if (rank < 0 || rank > n - 1) throw ModelFileError("field rank " + std::to_string(rank) + " outside 0.." + std::to_string(n - 1));
        if (!m.ctx.signature.empty() && static_cast<int>(m.ctx.signature.size()) != n)
            throw ModelFileError("signature has " + std::to_string(m.ctx.signature.size()) + " entries for dimension " + std::to_string(n));
        m.ctx.n = n;
        m.ctx.r = rank;
        for (auto& e : entries("domain")) {
            if (e.key == "cells") {
                has_cells = true;
                for (auto& it : list(e)) {
                    double v = number_text(it.text, e.line, it.col0, m);
                    if (v != std::floor(v) || v < 2) throw ModelFileError("cells must be integers >= 2", e.line, it.col0 + 1);
                    cells.push_back(static_cast<int>(v));
                }
            } else if (e.key == "length") {
                for (auto& it : list(e)) lengths.push_back(number_text(it.text, e.line, it.col0, m));
            }
        }
        if (n == 1) {
            if (!cells.empty() || !lengths.empty()) throw ModelFileError("a one-dimensional model has no spatial cells or length");
            return;
        }
        if (!has_cells) throw ModelFileError("[domain] needs cells for dimension " + std::to_string(n));
        if (lengths.empty()) lengths.push_back(2 * M_PI);
        auto widen = [&](auto& v, const char* what) {
            if (v.size() == 1) v.assign(n - 1, v[0]);
            if (static_cast<int>(v.size()) != n - 1)
                throw ModelFileError(std::string(what) + " needs 1 or " + std::to_string(n - 1) + " values");
        };
        widen(cells, "cells");
        widen(lengths, "length");
        std::vector<int> sizes{2};
        std::vector<double> ext{1.0};
        sizes.insert(sizes.end(), cells.begin(), cells.end());
        ext.insert(ext.end(), lengths.begin(), lengths.end());
        try {
            m.grid = DomainGrid::make(sizes, ext, Boundary::periodic, m.ctx.sig());
        } catch (const FormError& e) {
            throw ModelFileError(e.what());
        }
    }

    static std::pair<std::string, std::string> signature_of(const Entry& e) {
        // NAME(ARG)
        auto open = e.key.find('('), close = e.key.rfind(')');
        if (open == std::string::npos || close != e.key.size() - 1 || close < open)
            throw ModelFileError("expected NAME(arg) = expression", e.line, e.key_col);
        std::size_t l1, l2;
        std::string name = trim(e.key.substr(0, open), l1), arg = trim(e.key.substr(open + 1, close - open - 1), l2);
        if (!valid_identifier(name) || !valid_identifier(arg)) throw ModelFileError("expected NAME(arg) = expression", e.line, e.key_col);
        return {name, arg};
    }

    void potentials(ModelSpec& m) {
        static const std::set<std::string> reserved{"wedge", "star", "d", "pow", "vol", "C", "P", "pi", "t"};
        for (auto& e : entries("potential")) {
            auto [name, arg] = signature_of(e);
            if (is_builtin_function(name) || reserved.count(name) || m.ctx.params.count(name) || name == m.field_name ||
                name == m.momentum_name)
                throw ModelFileError("'" + name + "' cannot name a function", e.line, e.key_col);
            if (m.ctx.functions.count(name)) throw ModelFileError("function '" + name + "' defined twice", e.line, e.key_col);
            Scope sc;
            sc.n = m.ctx.n;
            sc.ctx = &m.ctx;
            sc.arg = arg;
            sc.fields = false;
            sc.where = "a function body";
            Expr body = expression(e.value, e.line, e.value_col, sc);
            try {
                auto g = infer_grade(body, m.ctx);
                if (!(g == GradeSignature{0, 0})) throw ModelFileError("function body has grade " + g.str() + ", expected [0;0]", e.line, e.value_col + 1);
            } catch (const HMapError& ex) {
                throw positioned(ex, e);
            }
            m.ctx.functions[name] = {arg, body};
        }
    }

    void equations(ModelSpec& m) {
        std::string want = GradeSignature{0, m.n()}.str();
        for (auto& e : entries("equations")) {
            bool lag = e.key == "lagrangian";
            if (!lag && e.key != "hamiltonian") unknown("equations", e);
            Scope sc;
            sc.n = m.n();
            sc.ctx = &m.ctx;
            sc.field = m.field_name;
            sc.momentum = m.momentum_name;
            sc.allow_d = lag;
            sc.where = lag ? "the lagrangian" : "the hamiltonian";
            Expr x = expression(e.value, e.line, e.value_col, sc);
            HMapContext c = m.ctx;
            c.allow_d = lag;
            GradeSignature g;
            try {
                g = infer_grade(x, c);
            } catch (const HMapError& ex) {
                throw positioned(ex, e);
            }
            if (g.str() != want)
                throw ModelFileError(e.key + " has grade " + g.str() + ", expected " + want + " (node: " + describe(x) + ")", e.line,
                                     e.value_col + 1);
            (lag ? m.lagrangian : m.hamiltonian) = x;
        }
        if (!m.lagrangian && !m.hamiltonian) throw ModelFileError("[equations] needs a lagrangian or a hamiltonian");
    }

    void simulation(ModelSpec& m) {
        for (auto& e : entries("simulation")) {
            if (e.key == "dt") m.sim.dt = number(e, m);
            else if (e.key == "steps") m.sim.steps = integer(e, m);
            else if (e.key == "record_every") m.sim.record_every = integer(e, m);
            else if (e.key == "tolerance") m.sim.tolerance = number(e, m);
            else if (e.key == "seed") {
                double v = number(e, m);
                if (v < 0 || v != std::floor(v) || v > 9007199254740992.0) throw ModelFileError("seed must be a non-negative integer", e.line, e.value_col + 1);
                m.sim.seed = static_cast<std::uint64_t>(v);
            } else if (e.key == "scheme") {
                try {
                    parse_scheme(e.value);
                } catch (const SchemeError& ex) {
                    throw ModelFileError(ex.what(), e.line, e.value_col + 1);
                }
                m.sim.scheme = e.value;
            } else if (e.key == "allow_cfl_violation") {
                if (e.value != "true" && e.value != "false") throw ModelFileError("expected true or false", e.line, e.value_col + 1);
                m.sim.allow_cfl_violation = e.value == "true";
            } else {
                unknown("simulation", e);
            }
        }
        if (!(m.sim.dt > 0)) throw ModelFileError("dt must be positive");
        if (m.sim.steps < 1 || m.sim.record_every < 1) throw ModelFileError("steps and record_every must be positive");
    }

    void initial(ModelSpec& m) {
        for (auto& e : entries("initial")) {
            if (!e.quoted && !e.value.empty() && e.value.front() == '[') {
                std::vector<double> v;
                for (auto& it : list(e)) v.push_back(number_text(it.text, e.line, it.col0, m));
                m.initial_arrays[e.key] = std::move(v);
                continue;
            }
            Scope sc;
            sc.n = m.n();
            sc.ctx = &m.ctx;
            sc.fields = false;
            sc.coordinates = true;
            sc.where = "initial data";
            Expr x = expression(e.value, e.line, e.value_col, sc);
            try {
                infer_grade(x, m.ctx);
            } catch (const HMapError& ex) {
                throw positioned(ex, e);
            }
            m.initial[e.key] = x;
        }
    }

    Sections sec_;
};

// --- printing ------------------------------------------------------------------------

struct Printer {
    const ModelSpec& m;
    std::string arg;

    std::string num(double v) const { return format_double(v); }

    std::string operator()(const Expr& e, int prec) const {
        auto wrap = [&](std::string s, int level) { return prec > level ? "(" + s + ")" : s; };
        switch (e->op) {
            case Op::Const: {
                std::string s = num(e->value);
                return (s[0] == '-' && prec >= 3) ? "(" + s + ")" : s;
            }
            case Op::Param: return e->name;
            case Op::FieldC: return m.field_name;
            case Op::FieldP: return m.momentum_name;
            case Op::FieldX: return e->index == 0 ? "t" : "x" + std::to_string(e->index);
            case Op::Arg: return arg;
            case Op::CoordDiff: return "dx" + std::to_string(e->index);
            case Op::VolSlot:
                if (e->mask) throw ModelFileError("Vol slots have no file syntax");
                return "vol";
            case Op::Star: return "star(" + (*this)(e->kids[0], 0) + ")";
            case Op::ExtD: return "d(" + (*this)(e->kids[0], 0) + ")";
            case Op::ScalarFun: return e->name + std::string(static_cast<std::size_t>(e->index), '\'') + "(" + (*this)(e->kids[0], 0) + ")";
            case Op::Pow: return wrap((*this)(e->kids[0], 3) + "^" + num(e->value), 2);
            case Op::Wedge: return wrap((*this)(e->kids[0], 1) + "*" + (*this)(e->kids[1], 2), 1);
            case Op::Neg: return wrap("-" + (*this)(e->kids[0], 2), 2);
            case Op::Sum: {
                if (e->kids.empty()) return "0";
                std::string s = (*this)(e->kids[0], 0);
                for (std::size_t i = 1; i < e->kids.size(); ++i) {
                    const Expr& k = e->kids[i];
                    if (k->op == Op::Neg) s += " - " + (*this)(k->kids[0], 1);
                    else s += " + " + (*this)(k, 1);
                }
                return wrap(s, 0);
            }
            default:
                throw ModelFileError("expression has no file syntax: " + describe(e));
        }
    }
};

}  // namespace

std::string expr_source(const Expr& e, const ModelSpec& m, const std::string& arg) { return Printer{m, arg}(e, 0); }

ModelSpec parse_model(const std::string& text) { return Builder(split_sections(text)).build(); }

ModelSpec load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelFileError("cannot open model file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    ModelSpec m = parse_model(ss.str());
    if (m.name.empty()) m.name = path.stem().string();
    return m;
}

std::string print_model(const ModelSpec& m) {
    std::ostringstream o;
    auto num = [](double v) { return format_double(v); };
    if (!m.name.empty()) o << "[model]\nname = " << m.name << "\n\n";
    o << "[field]\nname = " << m.field_name << "\nmomentum = " << m.momentum_name << "\nrank = " << m.r() << "\n\n";
    o << "[domain]\ndimension = " << m.n() << "\n";
    if (m.grid) {
        o << "cells = ";
        for (int a = 1; a < m.grid->dim; ++a) o << (a > 1 ? ", " : "") << m.grid->sizes[a];
        o << "\nlength = ";
        for (int a = 1; a < m.grid->dim; ++a) o << (a > 1 ? ", " : "") << num(m.grid->extents[a]);
        o << "\nboundary = periodic\n";
    }
    if (!m.ctx.signature.empty()) {
        o << "signature = ";
        for (std::size_t i = 0; i < m.ctx.signature.size(); ++i) o << (i ? ", " : "") << (m.ctx.signature[i] > 0 ? "+" : "-");
        o << "\n";
    }
    if (!m.ctx.params.empty()) {
        o << "\n[params]\n";
        for (auto& [k, v] : m.ctx.params) o << k << " = " << num(v) << "\n";
    }
    if (!m.ctx.functions.empty()) {
        o << "\n[potential]\n";
        for (auto& [k, f] : m.ctx.functions) o << k << "(" << f.arg_name << ") = \"" << expr_source(f.body, m, f.arg_name) << "\"\n";
    }
    o << "\n[equations]\n";
    if (m.lagrangian) o << "lagrangian = \"" << expr_source(m.lagrangian, m) << "\"\n";
    if (m.hamiltonian) o << "hamiltonian = \"" << expr_source(m.hamiltonian, m) << "\"\n";
    o << "\n[simulation]\ndt = " << num(m.sim.dt) << "\nsteps = " << m.sim.steps << "\nrecord_every = " << m.sim.record_every
      << "\n";
    if (!m.sim.scheme.empty()) o << "scheme = " << m.sim.scheme << "\n";
    o << "tolerance = " << num(m.sim.tolerance) << "\nseed = " << m.sim.seed
      << "\nallow_cfl_violation = " << (m.sim.allow_cfl_violation ? "true" : "false") << "\n";
    if (!m.initial.empty() || !m.initial_arrays.empty()) {
        o << "\n[initial]\n";
        for (auto& [k, e] : m.initial)
            if (!m.initial_arrays.count(k)) o << k << " = \"" << expr_source(e, m) << "\"\n";
        for (auto& [k, v] : m.initial_arrays) {
            o << k << " = [";
            for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << num(v[i]);
            o << "]\n";
        }
    }
    return o.str();
}

}  // namespace histodyn
