#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "charlab/ast.hpp"
#include "charlab/errors.hpp"

namespace charlab {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
  enum class Type { Int, Ident, Sym, DotDot, Arrow, End };
  Type type = Type::End;
  long long int_val = 0;
  std::string text;
  std::size_t line = 1, col = 1;
};

class Lexer {
public:
  explicit Lexer(std::string src) : src_(std::move(src)) { tokenize(); }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : end_;
  }
  Token next() {
    const Token& t = peek();
    if (pos_ < tokens_.size()) ++pos_;
    return t;
  }
  std::size_t save() const { return pos_; }
  void restore(std::size_t s) { pos_ = s; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw SyntaxError(t.line, t.col, msg);
  }

private:
  std::string src_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Token end_;

  void tokenize() {
    std::size_t line = 1, col = 1, i = 0;
    auto advance = [&](std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) {
        if (src_[i + k] == '\n') { ++line; col = 1; } else ++col;
      }
      i += n;
    };
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '#') {
        std::size_t j = i;
        while (j < src_.size() && src_[j] != '\n') ++j;
        advance(j - i);
        continue;
      }
      if (std::isspace((unsigned char)c)) { advance(1); continue; }
      Token t;
      t.line = line;
      t.col = col;
      if (std::isdigit((unsigned char)c)) {
        std::size_t j = i;
        while (j < src_.size() && std::isdigit((unsigned char)src_[j])) ++j;
        t.type = Token::Type::Int;
        t.text = src_.substr(i, j - i);
        t.int_val = std::stoll(t.text);
        tokens_.push_back(t);
        advance(j - i);
        continue;
      }
      if (std::isalpha((unsigned char)c)) {
        std::size_t j = i;
        while (j < src_.size() &&
               (std::isalnum((unsigned char)src_[j]) || src_[j] == '_'))
          ++j;
        t.type = Token::Type::Ident;
        t.text = src_.substr(i, j - i);
        tokens_.push_back(t);
        advance(j - i);
        continue;
      }
      if (c == '.' && i + 1 < src_.size() && src_[i + 1] == '.') {
        t.type = Token::Type::DotDot;
        t.text = "..";
        tokens_.push_back(t);
        advance(2);
        continue;
      }
      if (c == '-' && i + 1 < src_.size() && src_[i + 1] == '>') {
        t.type = Token::Type::Arrow;
        t.text = "->";
        tokens_.push_back(t);
        advance(2);
        continue;
      }
      static const std::string syms = "+-*/^()=,;:@";
      if (syms.find(c) != std::string::npos) {
        t.type = Token::Type::Sym;
        t.text = std::string(1, c);
        tokens_.push_back(t);
        advance(1);
        continue;
      }
      throw SyntaxError(line, col, std::string("unexpected character '") + c + "'");
    }
    end_.line = line;
    end_.col = col;
  }
};

inline bool is_sym(const Token& t, const char* s) {
  return t.type == Token::Type::Sym && t.text == s;
}
inline bool is_ident(const Token& t, const char* s) {
  return t.type == Token::Type::Ident && t.text == s;
}

// Variable classes recognized inside expressions. Which classes are legal
// depends on the declaration kind being parsed.
enum class VarClass { X, A, Z, ZSlot, Y, T, YBlock, ZBlock, Kappa };

struct VarKey {
  VarClass cls;
  int index;  // 1-based for indexed classes; atom slot for Kappa
  friend bool operator<(const VarKey& a, const VarKey& b) {
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.index < b.index;
  }
  friend bool operator==(const VarKey& a, const VarKey& b) {
    return a.cls == b.cls && a.index == b.index;
  }
};

// Polynomial over a dynamic variable table with rational coefficients and
// signed exponents; remapped into concrete AST types after parsing.
struct RPoly {
  std::map<std::map<VarKey, int>, Rat> terms;

  static RPoly constant(Rat c) {
    RPoly p;
    if (!c.is_zero()) p.terms[{}] = c;
    return p;
  }
  static RPoly variable(VarKey k, int exp) {
    RPoly p;
    std::map<VarKey, int> m;
    if (exp != 0) m[k] = exp;
    p.terms[m] = Rat(1);
    return p;
  }
  void add_term(const std::map<VarKey, int>& e, const Rat& c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (!c.is_zero()) terms[e] = c;
    } else {
      it->second = it->second + c;
      if (it->second.is_zero()) terms.erase(it);
    }
  }
  friend RPoly operator+(const RPoly& a, const RPoly& b) {
    RPoly r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, c);
    return r;
  }
  friend RPoly operator-(const RPoly& a, const RPoly& b) {
    RPoly r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, -c);
    return r;
  }
  friend RPoly operator*(const RPoly& a, const RPoly& b) {
    RPoly r;
    for (auto& [ea, ca] : a.terms)
      for (auto& [eb, cb] : b.terms) {
        auto e = ea;
        for (auto& [k, x] : eb) {
          e[k] += x;
          if (e[k] == 0) e.erase(k);
        }
        r.add_term(e, ca * cb);
      }
    return r;
  }
  RPoly pow(int k) const {
    if (k < 0) {
      // only legal for single monomials with invertible structure; callers
      // in Laurent/multiplicative contexts handle this
      if (terms.size() != 1) throw std::domain_error("negative power of a sum");
      RPoly r;
      auto& [e, c] = *terms.begin();
      std::map<VarKey, int> ne;
      for (auto& [key, x] : e) ne[key] = x * k;
      Rat nc(1);
      for (int i = 0; i < -k; ++i) nc = nc / c;
      r.terms[ne] = nc;
      return r;
    }
    RPoly r = constant(Rat(1));
    for (int i = 0; i < k; ++i) r = r * (*this);
    return r;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
  explicit Parser(const std::string& src, int max_predicate_depth = 64)
      : lex_(src), max_depth_(max_predicate_depth) {}

  Definitions parse_program() {
    Definitions defs;
    while (lex_.peek().type != detail::Token::Type::End) {
      parse_decl(defs);
    }
    return defs;
  }

private:
  detail::Lexer lex_;
  int max_depth_ = 64;
  int pred_depth_ = 0;
  std::vector<KappaCall> pending_atoms_;  // kappa atoms of the field term
  const Definitions* defs_so_far_ = nullptr;

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.pred_depth_ > p.max_depth_)
        p.lex_.fail("predicate nesting exceeds the depth bound of " +
                    std::to_string(p.max_depth_));
    }
    ~DepthGuard() { --p.pred_depth_; }
  };

  using Token = detail::Token;
  using VarKey = detail::VarKey;
  using VarClass = detail::VarClass;
  using RPoly = detail::RPoly;

  static const std::vector<std::string>& kinds() {
    static const std::vector<std::string> k = {
        "poly", "laurent", "formula", "linmap", "multmap",
        "predicate", "theta", "kappa", "witness"};
    return k;
  }

  // "prefixNNN" with at least one digit
  static std::optional<int> prefixed_id(const std::string& s, const char* prefix) {
    std::size_t n = std::string(prefix).size();
    if (s.size() <= n || s.compare(0, n, prefix) != 0) return std::nullopt;
    for (std::size_t i = n; i < s.size(); ++i)
      if (!std::isdigit((unsigned char)s[i])) return std::nullopt;
    return std::stoi(s.substr(n));
  }

  bool at_decl_boundary() const {
    const Token& a = lex_.peek(0);
    if (a.type == Token::Type::End) return true;
    if (a.type != Token::Type::Ident) return false;
    for (auto& k : kinds())
      if (a.text == k)
        return lex_.peek(1).type == Token::Type::Int &&
               detail::is_sym(lex_.peek(2), ":");
    return false;
  }

  void expect_sym(const char* s) {
    if (!detail::is_sym(lex_.peek(), s))
      lex_.fail(std::string("expected '") + s + "'");
    lex_.next();
  }
  long long expect_int() {
    if (lex_.peek().type != Token::Type::Int) lex_.fail("expected integer");
    return lex_.next().int_val;
  }
  void accept_sym(const char* s) {
    if (detail::is_sym(lex_.peek(), s)) lex_.next();
  }

  void parse_decl(Definitions& defs) {
    defs_so_far_ = &defs;
    const Token& t = lex_.peek();
    if (t.type != Token::Type::Ident) lex_.fail("expected declaration keyword");
    std::string kind = t.text;
    bool known = false;
    for (auto& k : kinds()) known |= (k == kind);
    if (!known) lex_.fail("unknown declaration kind '" + kind + "'");
    lex_.next();
    int id = (int)expect_int();
    expect_sym(":");
    if (kind == "poly") {
      if (!defs.polys.emplace(id, parse_poly_body()).second)
        lex_.fail("duplicate poly id");
    } else if (kind == "laurent") {
      if (!defs.laurents.emplace(id, parse_laurent_body()).second)
        lex_.fail("duplicate laurent id");
    } else if (kind == "formula") {
      if (!defs.formulas.emplace(id, parse_formula_body()).second)
        lex_.fail("duplicate formula id");
    } else if (kind == "linmap") {
      if (!defs.linmaps.emplace(id, parse_linmap_body()).second)
        lex_.fail("duplicate linmap id");
    } else if (kind == "multmap") {
      if (!defs.multmaps.emplace(id, parse_multmap_body()).second)
        lex_.fail("duplicate multmap id");
    } else if (kind == "predicate") {
      if (!defs.predicates.emplace(id, parse_predicate_body()).second)
        lex_.fail("duplicate predicate id");
    } else if (kind == "theta") {
      if (!defs.thetas.emplace(id, parse_theta_body()).second)
        lex_.fail("duplicate theta id");
    } else if (kind == "kappa") {
      if (!defs.kappas.emplace(id, parse_kappa_body()).second)
        lex_.fail("duplicate kappa id");
    } else if (kind == "witness") {
      if (!defs.witnesses.emplace(id, parse_witness_body()).second)
        lex_.fail("duplicate witness id");
    }
    accept_sym(";");
  }

  // --- variable recognition per context ------------------------------------

  struct VarContext {
    bool allow_x = false, allow_a = false, allow_z_slot = false,
         allow_z_indexed = false, allow_y = false, allow_t = false,
         allow_blocks = false, allow_kappa = false;
  };

  std::optional<VarKey> classify_var(const std::string& name,
                                     const VarContext& ctx) {
    auto split = [&](const std::string& s,
                     const char* prefix) -> std::optional<int> {
      std::size_t n = std::string(prefix).size();
      if (s.size() <= n || s.compare(0, n, prefix) != 0) return std::nullopt;
      for (std::size_t i = n; i < s.size(); ++i)
        if (!std::isdigit((unsigned char)s[i])) return std::nullopt;
      return std::stoi(s.substr(n));
    };
    if (ctx.allow_x)
      if (auto i = split(name, "x")) return VarKey{VarClass::X, *i};
    if (ctx.allow_a)
      if (auto i = split(name, "a")) return VarKey{VarClass::A, *i};
    if (ctx.allow_z_indexed)
      if (auto i = split(name, "z")) return VarKey{VarClass::Z, *i};
    if (ctx.allow_z_slot && name == "z") return VarKey{VarClass::ZSlot, 1};
    if (ctx.allow_y && name == "y") return VarKey{VarClass::Y, 1};
    if (ctx.allow_t && name == "t") return VarKey{VarClass::T, 1};
    if (ctx.allow_blocks) {
      if (auto i = split(name, "Y")) return VarKey{VarClass::YBlock, *i};
      if (auto i = split(name, "Z")) return VarKey{VarClass::ZBlock, *i};
    }
    return std::nullopt;
  }

  // --- generic expression parsing ------------------------------------------

  bool starts_factor(const VarContext& ctx) {
    const Token& t = lex_.peek();
    if (t.type == Token::Type::Int) return true;
    if (detail::is_sym(t, "(")) return true;
    if (t.type == Token::Type::Ident) {
      if (at_decl_boundary()) return false;
      if (ctx.allow_kappa && prefixed_id(t.text, "kappa")) return true;
      return classify_var(t.text, ctx).has_value();
    }
    return false;
  }

  RPoly parse_expr(const VarContext& ctx) {
    bool neg = false;
    if (detail::is_sym(lex_.peek(), "-")) { neg = true; lex_.next(); }
    else if (detail::is_sym(lex_.peek(), "+")) lex_.next();
    RPoly r = parse_term(ctx);
    if (neg) r = RPoly::constant(Rat(-1)) * r;
    while (detail::is_sym(lex_.peek(), "+") || detail::is_sym(lex_.peek(), "-")) {
      bool minus = lex_.next().text == "-";
      RPoly t = parse_term(ctx);
      r = minus ? r - t : r + t;
    }
    return r;
  }

  RPoly parse_term(const VarContext& ctx) {
    RPoly r = parse_factor(ctx);
    for (;;) {
      if (detail::is_sym(lex_.peek(), "*")) {
        lex_.next();
        r = r * parse_factor(ctx);
      } else if (starts_factor(ctx)) {
        r = r * parse_factor(ctx);
      } else {
        break;
      }
    }
    return r;
  }

  int parse_signed_exponent() {
    bool neg = false;
    if (detail::is_sym(lex_.peek(), "(")) {
      lex_.next();
      if (detail::is_sym(lex_.peek(), "-")) { neg = true; lex_.next(); }
      long long v = expect_int();
      expect_sym(")");
      return (int)(neg ? -v : v);
    }
    if (detail::is_sym(lex_.peek(), "-")) { neg = true; lex_.next(); }
    long long v = expect_int();
    return (int)(neg ? -v : v);
  }

  RPoly parse_factor(const VarContext& ctx) {
    const Token& t = lex_.peek();
    if (t.type == Token::Type::Int) {
      long long n = lex_.next().int_val;
      Rat c(n);
      if (detail::is_sym(lex_.peek(), "/")) {
        lex_.next();
        long long d = expect_int();
        c = Rat(n, d);
      }
      return RPoly::constant(c);
    }
    if (detail::is_sym(t, "(")) {
      lex_.next();
      RPoly inner = parse_expr(ctx);
      expect_sym(")");
      if (detail::is_sym(lex_.peek(), "^")) {
        lex_.next();
        return inner.pow(parse_signed_exponent());
      }
      return inner;
    }
    if (t.type == Token::Type::Ident) {
      if (ctx.allow_kappa && prefixed_id(t.text, "kappa")) {
        return parse_kappa_atom(ctx);
      }
      auto key = classify_var(t.text, ctx);
      if (!key) lex_.fail("unexpected identifier '" + t.text + "'");
      lex_.next();
      int exp = 1;
      if (detail::is_sym(lex_.peek(), "^")) {
        lex_.next();
        exp = parse_signed_exponent();
      }
      return RPoly::variable(*key, exp);
    }
    lex_.fail("expected a factor");
  }

  RPoly parse_kappa_atom(const VarContext& ctx) {
    std::string name = lex_.next().text;
    int id = *prefixed_id(name, "kappa");
    expect_sym("(");
    KappaCall call;
    call.id = id;
    if (!detail::is_sym(lex_.peek(), ")")) {
      for (;;) {
        // each argument is its own field term with its own atom table
        std::vector<KappaCall> saved = std::move(pending_atoms_);
        pending_atoms_.clear();
        RPoly arg = parse_expr(ctx);
        call.args.push_back(finish_field_term(arg, ctx));
        pending_atoms_ = std::move(saved);
        if (detail::is_sym(lex_.peek(), ",")) { lex_.next(); continue; }
        break;
      }
    }
    expect_sym(")");
    // reuse the slot of an identical call
    int slot = -1;
    for (std::size_t i = 0; i < pending_atoms_.size(); ++i)
      if (kappa_call_equal(pending_atoms_[i], call)) { slot = (int)i; break; }
    if (slot < 0) {
      slot = (int)pending_atoms_.size();
      pending_atoms_.push_back(call);
    }
    int exp = 1;
    if (detail::is_sym(lex_.peek(), "^")) {
      lex_.next();
      exp = parse_signed_exponent();
      if (exp < 0) lex_.fail("negative power of a kappa term");
    }
    return RPoly::variable(VarKey{VarClass::Kappa, slot}, exp);
  }

  // --- conversions from RPoly to AST types ----------------------------------

  static int max_index(const RPoly& p, VarClass cls) {
    int m = 0;
    for (auto& [e, c] : p.terms)
      for (auto& [k, x] : e)
        if (k.cls == cls) m = std::max(m, k.index);
    return m;
  }

  // Remap an RPoly onto a fixed slot layout. slot_of returns -1 for illegal
  // variables.
  PolyExpr to_poly(const RPoly& p, int arity,
                   const std::function<int(const VarKey&)>& slot_of,
                   bool allow_negative = false) {
    PolyExpr out;
    out.arity = arity;
    for (auto& [e, c] : p.terms) {
      if (!c.is_integer()) lex_.fail("coefficient must be an integer here");
      ExpVec v(arity, 0);
      for (auto& [k, x] : e) {
        int s = slot_of(k);
        if (s < 0) lex_.fail("variable not allowed in this context");
        if (!allow_negative && x < 0) lex_.fail("negative exponent not allowed here");
        v[s] += x;
      }
      out.add_term(v, c.num);
    }
    return out;
  }

  PolyExpr to_x_poly(const RPoly& p, int min_arity = 0) {
    int n = std::max(min_arity, max_index(p, VarClass::X));
    if (n == 0) n = 1;
    return to_poly(p, n, [&](const VarKey& k) {
      return k.cls == VarClass::X ? k.index - 1 : -1;
    });
  }

  FieldTerm finish_field_term(const RPoly& p, const VarContext&) {
    FieldTerm t;
    int n = max_index(p, VarClass::X);
    if (n == 0) n = 1;
    t.point_arity = n;
    int natoms = (int)pending_atoms_.size();
    t.shell = to_poly(p, n + natoms, [&](const VarKey& k) {
      if (k.cls == VarClass::X) return k.index - 1;
      if (k.cls == VarClass::Kappa) return n + k.index;
      return -1;
    });
    t.atoms = pending_atoms_;
    return t;
  }

  // --- declaration bodies ---------------------------------------------------

  PolyExpr parse_poly_body() {
    VarContext ctx;
    ctx.allow_x = true;
    return to_x_poly(parse_expr(ctx));
  }

  LaurentPoly parse_laurent_body() {
    VarContext ctx;
    ctx.allow_blocks = true;
    RPoly p = parse_expr(ctx);
    int n = std::max(max_index(p, VarClass::YBlock), max_index(p, VarClass::ZBlock));
    if (n == 0) n = 1;
    LaurentPoly out;
    out.n = n;
    for (auto& [e, c] : p.terms) {
      ExpVec v(2 * n, 0);
      for (auto& [k, x] : e) {
        if (k.cls == VarClass::YBlock) v[k.index - 1] += x;
        else if (k.cls == VarClass::ZBlock) v[n + k.index - 1] += x;
        else lex_.fail("only Y/Z variables are allowed in Laurent bodies");
      }
      out.add_term(v, c);
    }
    return out;
  }

  // Raw formula tree prior to arity resolution.
  struct RawFormula {
    FormulaNode::Kind kind;
    RPoly poly;      // Eq / Exists
    bool has_t = false;
    std::vector<RawFormula> children;
  };

  Formula parse_formula_body() {
    RawFormula raw = parse_formula_or();
    int n = raw_formula_arity(raw);
    if (n == 0) n = 1;
    Formula f;
    f.arity = n;
    f.root = finish_formula(raw, n);
    return f;
  }

  int raw_formula_arity(const RawFormula& r) {
    int n = max_index(r.poly, VarClass::X);
    for (auto& c : r.children) n = std::max(n, raw_formula_arity(c));
    return n;
  }

  FormulaPtr finish_formula(const RawFormula& r, int n) {
    auto node = std::make_shared<FormulaNode>();
    node->kind = r.kind;
    if (r.kind == FormulaNode::Kind::Eq || r.kind == FormulaNode::Kind::Exists) {
      bool ex = r.kind == FormulaNode::Kind::Exists;
      node->poly = to_poly(r.poly, n + (ex ? 1 : 0), [&](const VarKey& k) {
        if (k.cls == VarClass::X) return k.index - 1;
        if (k.cls == VarClass::T && ex) return n;
        return -1;
      });
    }
    for (auto& c : r.children) node->children.push_back(finish_formula(c, n));
    return node;
  }

  RawFormula parse_formula_or() {
    RawFormula r = parse_formula_and();
    while (detail::is_ident(lex_.peek(), "or")) {
      lex_.next();
      RawFormula rhs = parse_formula_and();
      RawFormula o;
      o.kind = FormulaNode::Kind::Or;
      o.children = {std::move(r), std::move(rhs)};
      r = std::move(o);
    }
    return r;
  }

  RawFormula parse_formula_and() {
    RawFormula r = parse_formula_unit();
    while (detail::is_ident(lex_.peek(), "and")) {
      lex_.next();
      RawFormula rhs = parse_formula_unit();
      RawFormula a;
      a.kind = FormulaNode::Kind::And;
      a.children = {std::move(r), std::move(rhs)};
      r = std::move(a);
    }
    return r;
  }

  RawFormula parse_formula_unit() {
    const Token& t = lex_.peek();
    if (detail::is_ident(t, "not")) {
      lex_.next();
      RawFormula n;
      n.kind = FormulaNode::Kind::Not;
      n.children = {parse_formula_unit()};
      return n;
    }
    if (detail::is_ident(t, "true")) {
      lex_.next();
      RawFormula r;
      r.kind = FormulaNode::Kind::True;
      return r;
    }
    if (detail::is_ident(t, "false")) {
      lex_.next();
      RawFormula r;
      r.kind = FormulaNode::Kind::False;
      return r;
    }
    if (detail::is_ident(t, "exists")) {
      lex_.next();
      if (!detail::is_ident(lex_.peek(), "t")) lex_.fail("expected bound variable 't'");
      lex_.next();
      expect_sym("(");
      VarContext ctx;
      ctx.allow_x = ctx.allow_t = true;
      RPoly lhs = parse_expr(ctx);
      expect_sym("=");
      RPoly rhs = parse_expr(ctx);
      expect_sym(")");
      RawFormula r;
      r.kind = FormulaNode::Kind::Exists;
      r.poly = lhs - rhs;
      return r;
    }
    if (detail::is_sym(t, "(")) {
      // could be a parenthesized formula or a parenthesized polynomial that
      // begins an equation; try the formula reading first
      std::size_t snap = lex_.save();
      lex_.next();
      try {
        RawFormula inner = parse_formula_or();
        expect_sym(")");
        return inner;
      } catch (const SyntaxError&) {
        lex_.restore(snap);
      }
    }
    VarContext ctx;
    ctx.allow_x = true;
    RPoly lhs = parse_expr(ctx);
    expect_sym("=");
    RPoly rhs = parse_expr(ctx);
    RawFormula r;
    r.kind = FormulaNode::Kind::Eq;
    r.poly = lhs - rhs;
    return r;
  }

  IntegralLinearMap parse_linmap_body() {
    auto rows = parse_map_rows();
    IntegralLinearMap m;
    m.in_arity = rows.second;
    for (auto& p : rows.first) {
      std::vector<long long> row(rows.second, 0);
      for (auto& [e, c] : p.terms) {
        if (!c.is_integer()) lex_.fail("linear map entries must be integers");
        if (e.empty()) {
          if (!c.is_zero()) lex_.fail("linear map rows cannot have constants");
          continue;
        }
        if (e.size() != 1 || e.begin()->second != 1)
          lex_.fail("linear map rows must be linear");
        row[e.begin()->first.index - 1] += c.num;
      }
      m.rows.push_back(std::move(row));
    }
    return m;
  }

  IntegralMultiplicativeMap parse_multmap_body() {
    auto rows = parse_map_rows();
    IntegralMultiplicativeMap m;
    m.in_arity = rows.second;
    for (auto& p : rows.first) {
      std::vector<long long> row(rows.second, 0);
      if (p.terms.size() != 1 || !(p.terms.begin()->second == Rat(1)))
        lex_.fail("multiplicative map rows must be monomials with coefficient 1");
      for (auto& [k, x] : p.terms.begin()->first) row[k.index - 1] += x;
      m.rows.push_back(std::move(row));
    }
    return m;
  }

  // shared row parser: y1 = expr ; y2 = expr ; ...
  std::pair<std::vector<RPoly>, int> parse_map_rows() {
    std::vector<std::pair<int, RPoly>> rows;
    VarContext ctx;
    ctx.allow_x = true;
    int max_x = 0;
    for (;;) {
      const Token& t = lex_.peek();
      std::optional<int> j_opt;
      if (t.type == Token::Type::Ident) j_opt = prefixed_id(t.text, "y");
      if (!j_opt) lex_.fail("expected row 'y<j> = ...'");
      int j = *j_opt;
      lex_.next();
      expect_sym("=");
      RPoly p = parse_expr(ctx);
      max_x = std::max(max_x, max_index(p, VarClass::X));
      rows.emplace_back(j, std::move(p));
      if (detail::is_sym(lex_.peek(), ";") && !at_decl_boundary()) {
        std::size_t snap = lex_.save();
        lex_.next();
        if (at_decl_boundary() || lex_.peek().type == Token::Type::End) {
          lex_.restore(snap);
          break;
        }
        continue;
      }
      break;
    }
    std::sort(rows.begin(), rows.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<RPoly> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].first != (int)i + 1)
        lex_.fail("map rows must be y1..yk exactly once each");
      out.push_back(std::move(rows[i].second));
    }
    if (max_x == 0) max_x = 1;
    return {std::move(out), max_x};
  }

  // --- predicates -----------------------------------------------------------

  PredicateExpr parse_predicate_body() {
    PredicatePtr root = parse_pred_sum();
    int arity = predicate_arity(root);
    if (arity == 0) arity = 1;
    PredicateExpr p;
    p.arity = arity;
    p.root = root;
    return p;
  }

  static int predicate_arity(const PredicatePtr& n) {
    if (!n) return 0;
    int a = 0;
    auto term_arity = [](const FieldTerm& t) {
      int m = t.point_arity;
      return m;
    };
    switch (n->kind) {
      case PredicateNode::Kind::Psi:
      case PredicateNode::Kind::Chi:
        a = term_arity(n->term);
        break;
      case PredicateNode::Kind::Ind:
        a = n->formula.arity;
        break;
      case PredicateNode::Kind::ThetaRef:
        for (auto& t : n->theta_args) a = std::max(a, term_arity(t));
        break;
      default:
        break;
    }
    for (auto& c : n->children) a = std::max(a, predicate_arity(c));
    return a;
  }

  static PredicatePtr make_const(Rat re, Rat im) {
    auto n = std::make_shared<PredicateNode>();
    n->kind = PredicateNode::Kind::Const;
    n->const_re = re;
    n->const_im = im;
    return n;
  }

  PredicatePtr parse_pred_sum() {
    DepthGuard guard(*this);
    std::vector<PredicatePtr> parts;
    bool neg = false;
    if (detail::is_sym(lex_.peek(), "-")) { neg = true; lex_.next(); }
    else if (detail::is_sym(lex_.peek(), "+")) lex_.next();
    parts.push_back(normalize_negation(parse_pred_prod(), neg));
    while (detail::is_sym(lex_.peek(), "+") || detail::is_sym(lex_.peek(), "-")) {
      bool minus = lex_.next().text == "-";
      parts.push_back(normalize_negation(parse_pred_prod(), minus));
    }
    // fold constant summands into a single trailing constant
    Rat re(0), im(0);
    std::vector<PredicatePtr> rest;
    bool saw_const = false;
    for (auto& p : parts) {
      if (p->kind == PredicateNode::Kind::Const) {
        re = re + p->const_re;
        im = im + p->const_im;
        saw_const = true;
      } else {
        rest.push_back(p);
      }
    }
    if (rest.empty()) return make_const(re, im);
    if (saw_const && !(re.is_zero() && im.is_zero()))
      rest.push_back(make_const(re, im));
    if (rest.size() == 1) return rest[0];
    auto n = std::make_shared<PredicateNode>();
    n->kind = PredicateNode::Kind::Sum;
    n->children = std::move(rest);
    return n;
  }

  // fold a sign into a product's constant factor
  PredicatePtr normalize_negation(PredicatePtr p, bool neg) {
    if (!neg) return p;
    if (p->kind == PredicateNode::Kind::Const)
      return make_const(-p->const_re, -p->const_im);
    if (p->kind == PredicateNode::Kind::Prod &&
        p->children[0]->kind == PredicateNode::Kind::Const) {
      auto n = std::make_shared<PredicateNode>(*p);
      n->children[0] = make_const(-p->children[0]->const_re,
                                  -p->children[0]->const_im);
      return n;
    }
    auto n = std::make_shared<PredicateNode>();
    n->kind = PredicateNode::Kind::Prod;
    n->children = {make_const(Rat(-1), Rat(0)), p};
    return n;
  }

  PredicatePtr parse_pred_prod() {
    std::vector<PredicatePtr> parts;
    parts.push_back(parse_pred_factor());
    for (;;) {
      if (detail::is_sym(lex_.peek(), "*")) {
        lex_.next();
        parts.push_back(parse_pred_factor());
      } else if (pred_factor_starts()) {
        parts.push_back(parse_pred_factor());
      } else {
        break;
      }
    }
    // fold constants together and flatten
    Rat re(1), im(0);
    std::vector<PredicatePtr> rest;
    for (auto& p : parts) {
      if (p->kind == PredicateNode::Kind::Const) {
        Rat nre = re * p->const_re - im * p->const_im;
        Rat nim = re * p->const_im + im * p->const_re;
        re = nre;
        im = nim;
      } else {
        rest.push_back(p);
      }
    }
    bool unit_const = (re == Rat(1) && im == Rat(0));
    if (rest.empty()) return make_const(re, im);
    if (!unit_const) rest.insert(rest.begin(), make_const(re, im));
    if (rest.size() == 1) return rest[0];
    auto n = std::make_shared<PredicateNode>();
    n->kind = PredicateNode::Kind::Prod;
    n->children = std::move(rest);
    return n;
  }

  bool pred_factor_starts() {
    const Token& t = lex_.peek();
    if (at_decl_boundary()) return false;
    if (t.type == Token::Type::Int) return true;
    if (detail::is_sym(t, "(")) return true;
    if (t.type == Token::Type::Ident) {
      if (t.text == "i" || t.text == "Psi" || t.text == "Chi" || t.text == "ind" ||
          t.text == "conj" || t.text == "abs")
        return true;
      if (prefixed_id(t.text, "theta")) return true;
    }
    return false;
  }

  FieldTerm parse_field_term_arg() {
    VarContext ctx;
    ctx.allow_x = true;
    ctx.allow_kappa = true;
    std::vector<KappaCall> saved = std::move(pending_atoms_);
    pending_atoms_.clear();
    RPoly p = parse_expr(ctx);
    FieldTerm t = finish_field_term(p, ctx);
    pending_atoms_ = std::move(saved);
    return t;
  }

  PredicatePtr parse_pred_factor() {
    const Token& t = lex_.peek();
    if (t.type == Token::Type::Int) {
      long long n = lex_.next().int_val;
      Rat c(n);
      if (detail::is_sym(lex_.peek(), "/")) {
        lex_.next();
        c = Rat(n, expect_int());
      }
      return make_const(c, Rat(0));
    }
    if (detail::is_sym(t, "(")) {
      lex_.next();
      PredicatePtr inner = parse_pred_sum();
      expect_sym(")");
      return inner;
    }
    if (t.type != Token::Type::Ident) lex_.fail("expected predicate factor");
    if (t.text == "i") {
      lex_.next();
      return make_const(Rat(0), Rat(1));
    }
    if (t.text == "Psi" || t.text == "Chi") {
      bool psi = t.text == "Psi";
      lex_.next();
      expect_sym("(");
      FieldTerm term = parse_field_term_arg();
      expect_sym(")");
      auto n = std::make_shared<PredicateNode>();
      n->kind = psi ? PredicateNode::Kind::Psi : PredicateNode::Kind::Chi;
      n->term = std::move(term);
      return n;
    }
    if (t.text == "ind") {
      lex_.next();
      expect_sym("(");
      Formula f;
      if (detail::is_sym(lex_.peek(), "@")) {
        lex_.next();
        int id = (int)expect_int();
        auto it = defs_so_far_->formulas.find(id);
        if (it == defs_so_far_->formulas.end())
          lex_.fail("formula reference @" + std::to_string(id) + " not yet declared");
        f = it->second;
      } else {
        RawFormula raw = parse_formula_or();
        int n = raw_formula_arity(raw);
        if (n == 0) n = 1;
        f.arity = n;
        f.root = finish_formula(raw, n);
      }
      expect_sym(")");
      auto n = std::make_shared<PredicateNode>();
      n->kind = PredicateNode::Kind::Ind;
      n->formula = std::move(f);
      return n;
    }
    if (t.text == "conj" || t.text == "abs") {
      bool cj = t.text == "conj";
      lex_.next();
      expect_sym("(");
      PredicatePtr inner = parse_pred_sum();
      expect_sym(")");
      auto n = std::make_shared<PredicateNode>();
      n->kind = cj ? PredicateNode::Kind::Conj : PredicateNode::Kind::Abs;
      n->children = {inner};
      return n;
    }
    if (auto tid = prefixed_id(t.text, "theta")) {
      int id = *tid;
      lex_.next();
      expect_sym("(");
      std::vector<FieldTerm> args;
      if (!detail::is_sym(lex_.peek(), ")")) {
        for (;;) {
          args.push_back(parse_field_term_arg());
          if (detail::is_sym(lex_.peek(), ",")) { lex_.next(); continue; }
          break;
        }
      }
      expect_sym(")");
      auto n = std::make_shared<PredicateNode>();
      n->kind = PredicateNode::Kind::ThetaRef;
      n->theta_id = id;
      n->theta_args = std::move(args);
      return n;
    }
    lex_.fail("unexpected identifier '" + t.text + "' in predicate");
  }

  // --- theta ----------------------------------------------------------------

  ThetaSpec parse_theta_body() {
    ThetaSpec spec;
    spec.param_arity = 0;
    spec.fiber_arity = 0;
    bool have_g = false, have_h = false;
    RPoly g_expr, h_expr;
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type != Token::Type::Ident) lex_.fail("expected theta clause");
      if (t.text == "params") {
        lex_.next();
        spec.param_arity = (int)expect_int();
      } else if (t.text == "vars") {
        lex_.next();
        spec.fiber_arity = (int)expect_int();
      } else if (t.text == "bound") {
        lex_.next();
        spec.declared_bound = expect_int();
      } else if (t.text == "block") {
        if (spec.param_arity <= 0)
          lex_.fail("declare 'params' before the first block");
        lex_.next();
        ThetaSpec::Block blk;
        for (;;) {
          if (detail::is_ident(lex_.peek(), "root")) {
            lex_.next();
            expect_sym("(");
            VarContext ctx;
            ctx.allow_a = true;
            ctx.allow_z_slot = true;
            RPoly p = parse_expr(ctx);
            expect_sym(")");
            ThetaSpec::Slot slot;
            slot.is_const = false;
            int pa = spec.param_arity;
            slot.root = to_poly(p, pa + 1, [&](const VarKey& k) {
              if (k.cls == VarClass::A) {
                if (k.index > pa) return -1;
                return k.index - 1;
              }
              if (k.cls == VarClass::ZSlot) return pa;
              return -1;
            });
            blk.slots.push_back(std::move(slot));
          } else if (detail::is_ident(lex_.peek(), "const")) {
            lex_.next();
            ThetaSpec::Slot slot;
            slot.is_const = true;
            slot.constant = parse_rat_literal();
            blk.slots.push_back(std::move(slot));
          } else {
            lex_.fail("expected 'root' or 'const' slot");
          }
          if (detail::is_sym(lex_.peek(), ",")) { lex_.next(); continue; }
          break;
        }
        spec.blocks.push_back(std::move(blk));
      } else if (t.text == "g") {
        lex_.next();
        accept_sym(":");
        VarContext ctx;
        ctx.allow_z_indexed = true;
        g_expr = parse_expr(ctx);
        have_g = true;
      } else if (t.text == "h") {
        lex_.next();
        accept_sym(":");
        VarContext ctx;
        ctx.allow_z_indexed = true;
        h_expr = parse_expr(ctx);
        have_h = true;
      } else {
        lex_.fail("unknown theta clause '" + t.text + "'");
      }
      if (detail::is_sym(lex_.peek(), ";") && !at_decl_boundary()) {
        lex_.next();
        if (at_decl_boundary() || lex_.peek().type == Token::Type::End) break;
        continue;
      }
      break;
    }
    if (spec.param_arity <= 0) lex_.fail("theta requires 'params <n>'");
    if (spec.fiber_arity <= 0) lex_.fail("theta requires 'vars <m>'");
    if (spec.blocks.empty()) lex_.fail("theta requires at least one block");
    for (auto& b : spec.blocks)
      if ((int)b.slots.size() != spec.fiber_arity)
        lex_.fail("every block must have exactly 'vars' slots");
    if (!have_g || !have_h) lex_.fail("theta requires 'g' and 'h' rows");
    spec.g = row_from_linear(g_expr, spec.fiber_arity);
    spec.h = row_from_monomial(h_expr, spec.fiber_arity);
    return spec;
  }

  std::vector<long long> row_from_linear(const RPoly& p, int m) {
    std::vector<long long> row(m, 0);
    for (auto& [e, c] : p.terms) {
      if (!c.is_integer()) lex_.fail("g row must have integer entries");
      if (e.empty()) {
        if (!c.is_zero()) lex_.fail("g row cannot have a constant term");
        continue;
      }
      if (e.size() != 1 || e.begin()->second != 1)
        lex_.fail("g row must be linear in the z variables");
      int idx = e.begin()->first.index;
      if (idx < 1 || idx > m) lex_.fail("z index out of range in g row");
      row[idx - 1] += c.num;
    }
    return row;
  }

  std::vector<long long> row_from_monomial(const RPoly& p, int m) {
    std::vector<long long> row(m, 0);
    if (p.terms.size() != 1 || !(p.terms.begin()->second == Rat(1)))
      lex_.fail("h row must be a monomial with coefficient 1");
    for (auto& [k, x] : p.terms.begin()->first) {
      if (k.index < 1 || k.index > m) lex_.fail("z index out of range in h row");
      row[k.index - 1] += x;
    }
    return row;
  }

  Rat parse_rat_literal() {
    bool neg = false;
    bool paren = false;
    if (detail::is_sym(lex_.peek(), "(")) { paren = true; lex_.next(); }
    if (detail::is_sym(lex_.peek(), "-")) { neg = true; lex_.next(); }
    long long n = expect_int();
    long long d = 1;
    if (detail::is_sym(lex_.peek(), "/")) {
      lex_.next();
      d = expect_int();
    }
    if (paren) expect_sym(")");
    return Rat(neg ? -n : n, d);
  }

  // --- kappa ----------------------------------------------------------------

  KappaSpec parse_kappa_body() {
    KappaSpec spec;
    RPoly P, Q;
    bool haveP = false, haveQ = false;
    VarContext ctx;
    ctx.allow_x = true;
    ctx.allow_y = true;
    for (int clause = 0; clause < 2; ++clause) {
      const Token& t = lex_.peek();
      if (detail::is_ident(t, "P")) {
        lex_.next();
        accept_sym(":");
        P = parse_expr(ctx);
        haveP = true;
      } else if (detail::is_ident(t, "Q")) {
        lex_.next();
        accept_sym(":");
        Q = parse_expr(ctx);
        haveQ = true;
      } else {
        lex_.fail("expected 'P' or 'Q' clause");
      }
      if (clause == 0) expect_sym(";");
    }
    if (!haveP || !haveQ) lex_.fail("kappa requires both P and Q");
    int n = std::max(max_index(P, VarClass::X), max_index(Q, VarClass::X));
    if (n == 0) n = 1;
    spec.param_arity = n;
    auto slot = [&](const VarKey& k) {
      if (k.cls == VarClass::X) return k.index - 1;
      if (k.cls == VarClass::Y) return n;
      return -1;
    };
    spec.P = to_poly(P, n + 1, slot);
    spec.Q = to_poly(Q, n + 1, slot);
    if (spec.P.degree_in(n) < 1) lex_.fail("P must be non-constant in y");
    return spec;
  }

  // --- witness ----------------------------------------------------------------

  RatPoly to_rat_poly(const RPoly& p) {
    RatPoly out;
    for (auto& [e, c] : p.terms) {
      int deg = 0;
      if (!e.empty()) {
        if (e.size() != 1 || e.begin()->first.cls != VarClass::X ||
            e.begin()->first.index != 1)
          lex_.fail("witness polynomials are univariate in x1");
        deg = e.begin()->second;
        if (deg < 0) lex_.fail("negative exponent in witness polynomial");
      }
      if ((int)out.coeffs.size() <= deg) out.coeffs.resize(deg + 1, Rat(0));
      out.coeffs[deg] = out.coeffs[deg] + c;
    }
    if (out.coeffs.empty()) out.coeffs.push_back(Rat(0));
    return out;
  }

  RationalAngle parse_angle() {
    Rat r = parse_rat_literal();
    return RationalAngle::from_rat(r);
  }

  WitnessSpec parse_witness_body() {
    WitnessSpec spec;
    bool have_minpoly = false, have_rou = false;
    VarContext ctx;
    ctx.allow_x = true;
    for (;;) {
      const Token& t = lex_.peek();
      if (t.type != Token::Type::Ident) lex_.fail("expected witness clause");
      if (t.text == "minpoly") {
        lex_.next();
        spec.min_poly = to_rat_poly(parse_expr(ctx));
        have_minpoly = true;
      } else if (t.text == "gen") {
        lex_.next();
        RatPoly p = to_rat_poly(parse_expr(ctx));
        if (lex_.peek().type != Token::Type::Arrow) lex_.fail("expected '->'");
        lex_.next();
        spec.gens.emplace_back(std::move(p), parse_angle());
      } else if (t.text == "basis") {
        lex_.next();
        RatPoly p = to_rat_poly(parse_expr(ctx));
        if (lex_.peek().type != Token::Type::Arrow) lex_.fail("expected '->'");
        lex_.next();
        spec.basis.emplace_back(std::move(p), parse_angle());
      } else if (t.text == "tol") {
        lex_.next();
        spec.tolerance = parse_rat_literal();
        if (!(Rat(0) < spec.tolerance) || !(spec.tolerance <= Rat(1)))
          lex_.fail("tolerance must lie in (0, 1]");
      } else if (t.text == "rou") {
        lex_.next();
        spec.R = expect_int();
        spec.f = expect_int();
        if (spec.f < 1 || spec.f > spec.R)
          lex_.fail("rou requires 1 <= f <= R");
        spec.lambda_R = to_rat_poly(parse_expr(ctx));
        if (lex_.peek().type != Token::Type::Arrow) lex_.fail("expected '->'");
        lex_.next();
        spec.s_R = parse_angle();
        have_rou = true;
      } else if (t.text == "orderfloor") {
        lex_.next();
        spec.K = expect_int();
      } else if (t.text == "primes") {
        lex_.next();
        spec.p_min = expect_int();
        if (lex_.peek().type != Token::Type::DotDot) lex_.fail("expected '..'");
        lex_.next();
        spec.p_max = expect_int();
      } else {
        lex_.fail("unknown witness clause '" + t.text + "'");
      }
      if (detail::is_sym(lex_.peek(), ";") && !at_decl_boundary()) {
        lex_.next();
        if (at_decl_boundary() || lex_.peek().type == Token::Type::End) break;
        continue;
      }
      break;
    }
    if (!have_minpoly) lex_.fail("witness requires 'minpoly'");
    if (!have_rou) {
      spec.R = 1;
      spec.f = 1;
      spec.lambda_R.coeffs = {Rat(1)};
      spec.s_R = RationalAngle(0, 1);
    }
    return spec;
  }
};

inline Definitions parse_source(const std::string& text,
                                int max_predicate_depth = 64) {
  Parser p(text, max_predicate_depth);
  return p.parse_program();
}

}  // namespace charlab
