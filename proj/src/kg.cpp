#include "tsd/kg.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace tsd {

namespace kgns {

Term type_pred() { return Term::iri(rdf + "type"); }
Term fault_class() { return Term::iri(base + "SensorFault"); }
Term name_pred() { return Term::iri(base + "name"); }
Term desc_pred() { return Term::iri(base + "fault_desc"); }
Term severity_pred() { return Term::iri(base + "severity"); }
Term fault_iri(const std::string& id) { return Term::iri(base + id); }

}  // namespace kgns

void FaultGraph::add_fault(const SensorFault& fault) {
  if (fault.name.empty()) throw std::invalid_argument("fault name must be non-empty");
  if (fault.fault_desc.empty()) throw std::invalid_argument("fault_desc must be non-empty");
  if (fault_by_name(fault.name))
    throw std::invalid_argument("duplicate fault name: " + fault.name);

  const Term subject = kgns::fault_iri(fault.id);
  insert({subject, kgns::type_pred(), kgns::fault_class()});
  insert({subject, kgns::name_pred(), Term::literal(fault.name)});
  insert({subject, kgns::desc_pred(), Term::literal(fault.fault_desc)});
  insert({subject, kgns::severity_pred(), Term::literal(fault.severity)});
}

std::vector<Triple> FaultGraph::query(const std::optional<Term>& subject,
                                      const std::optional<Term>& predicate,
                                      const std::optional<Term>& object) const {
  std::vector<Triple> out;
  for (const Triple& t : triples_) {
    if (subject && t.subject != *subject) continue;
    if (predicate && t.predicate != *predicate) continue;
    if (object && t.object != *object) continue;
    out.push_back(t);
  }
  return out;  // set iteration is already (s, p, o) sorted
}

std::optional<SensorFault> FaultGraph::fault_by_name(const std::string& name) const {
  const auto hits = query(std::nullopt, kgns::name_pred(), Term::literal(name));
  if (hits.empty()) return std::nullopt;
  const Term& subject = hits.front().subject;

  SensorFault fault;
  fault.name = name;
  fault.id = subject.value.starts_with(kgns::base) ? subject.value.substr(kgns::base.size())
                                                   : subject.value;
  for (const Triple& t : query(subject, kgns::desc_pred(), std::nullopt))
    fault.fault_desc = t.object.value;
  for (const Triple& t : query(subject, kgns::severity_pred(), std::nullopt))
    fault.severity = t.object.value;
  return fault;
}

std::vector<SensorFault> FaultGraph::all_faults() const {
  std::vector<SensorFault> out;
  for (const Triple& t : query(std::nullopt, kgns::type_pred(), kgns::fault_class())) {
    const Term& subject = t.subject;
    SensorFault fault;
    fault.id = subject.value.starts_with(kgns::base) ? subject.value.substr(kgns::base.size())
                                                     : subject.value;
    for (const Triple& q : query(subject, kgns::name_pred(), std::nullopt))
      fault.name = q.object.value;
    for (const Triple& q : query(subject, kgns::desc_pred(), std::nullopt))
      fault.fault_desc = q.object.value;
    for (const Triple& q : query(subject, kgns::severity_pred(), std::nullopt))
      fault.severity = q.object.value;
    out.push_back(std::move(fault));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Turtle serialization

namespace {

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

void append_u_escape(std::string& out, unsigned char c) {
  static const char* hex = "0123456789ABCDEF";
  out += "\\u00";
  out.push_back(hex[c >> 4]);
  out.push_back(hex[c & 0xF]);
}

std::string escape_literal(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          append_u_escape(out, c);
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  return out;
}

std::string escape_iri(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' ||
        c == '^' || c == '`' || c == '\\') {
      append_u_escape(out, c);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

// Conservative PN_LOCAL subset shared by the writer and the parser.
bool pn_local_safe(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!(std::isalnum(c) || c == '_' || c == '-')) return false;
  }
  return s.back() != '-';
}

std::string render_iri(const std::string& iri) {
  if (iri.starts_with(kgns::base) && pn_local_safe(iri.substr(kgns::base.size())))
    return "sf:" + iri.substr(kgns::base.size());
  if (iri.starts_with(kgns::rdf) && pn_local_safe(iri.substr(kgns::rdf.size())))
    return "rdf:" + iri.substr(kgns::rdf.size());
  return "<" + escape_iri(iri) + ">";
}

std::string render_term(const Term& t) {
  if (t.kind == Term::Kind::iri) return render_iri(t.value);
  std::string out = "\"" + escape_literal(t.value) + "\"";
  if (!t.datatype.empty()) out += "^^" + render_iri(t.datatype);
  return out;
}

}  // namespace

std::string to_turtle(const FaultGraph& graph) {
  std::ostringstream out;
  out << "@prefix sf: <" << kgns::base << "> .\n";
  out << "@prefix rdf: <" << kgns::rdf << "> .\n";
  if (graph.size() > 0) out << "\n";
  for (const Triple& t : graph.triples()) {
    out << render_term(t.subject) << ' ' << render_term(t.predicate) << ' '
        << render_term(t.object) << " .\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Turtle parsing (subset)

namespace {

struct Token {
  enum class Kind { iri, pname, literal, dot, semicolon, comma, keyword_a, prefix_directive, eof };
  Kind kind = Kind::eof;
  std::string value;     // IRI / pname / literal body
  std::string datatype;  // literal datatype (IRI or pname)
  bool datatype_is_iri = false;
  int line = 0, column = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  int line() const { return line_; }
  int column() const { return col_; }

  [[noreturn]] void fail(const std::string& what) const { throw TurtleParseError(line_, col_, what); }

  bool eof() {
    skip_space();
    return pos_ >= text_.size();
  }

  Token next() {
    skip_space();
    Token tok;
    tok.line = line_;
    tok.column = col_;
    if (pos_ >= text_.size()) {
      tok.kind = Token::Kind::eof;
      return tok;
    }
    const char c = text_[pos_];
    if (c == '.') {
      advance();
      tok.kind = Token::Kind::dot;
      return tok;
    }
    if (c == ';') {
      advance();
      tok.kind = Token::Kind::semicolon;
      return tok;
    }
    if (c == ',') {
      advance();
      tok.kind = Token::Kind::comma;
      return tok;
    }
    if (c == '<') {
      tok.kind = Token::Kind::iri;
      tok.value = lex_iri();
      return tok;
    }
    if (c == '"') {
      tok.kind = Token::Kind::literal;
      tok.value = lex_string();
      if (pos_ + 1 < text_.size() && text_[pos_] == '^' && text_[pos_ + 1] == '^') {
        advance();
        advance();
        if (pos_ < text_.size() && text_[pos_] == '<') {
          tok.datatype = lex_iri();
          tok.datatype_is_iri = true;
        } else {
          tok.datatype = lex_pname_raw();
        }
      }
      return tok;
    }
    if (c == '@') {
      const std::string word = lex_word();
      if (word == "@prefix") {
        tok.kind = Token::Kind::prefix_directive;
        return tok;
      }
      fail("unsupported directive " + word);
    }
    if (c == 'a' && pos_ + 1 < text_.size() &&
        (std::isspace(static_cast<unsigned char>(text_[pos_ + 1])))) {
      advance();
      tok.kind = Token::Kind::keyword_a;
      return tok;
    }
    // prefixed name
    tok.kind = Token::Kind::pname;
    tok.value = lex_pname_raw();
    return tok;
  }

  // "prefix:" label as used in @prefix directives.
  std::string lex_prefix_label() {
    skip_space();
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != ':') {
      const unsigned char c = static_cast<unsigned char>(text_[pos_]);
      if (std::isspace(c)) fail("expected ':' in prefix label");
      out.push_back(text_[pos_]);
      advance();
    }
    if (pos_ >= text_.size()) fail("unterminated prefix label");
    advance();  // ':'
    return out;
  }

  std::string lex_iri() {
    advance();  // '<'
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated IRI");
      const char c = text_[pos_];
      if (c == '>') {
        advance();
        return out;
      }
      if (c == '\\') {
        out += lex_escape();
        continue;
      }
      if (static_cast<unsigned char>(c) < 0x20 || c == '<' || c == '"' || c == '{' || c == '}' ||
          c == '|' || c == '^' || c == '`' || c == ' ')
        fail("character not allowed in IRI");
      out.push_back(c);
      advance();
    }
  }

  std::string lex_string() {
    advance();  // '"'
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string literal");
      const char c = text_[pos_];
      if (c == '"') {
        advance();
        return out;
      }
      if (c == '\\') {
        out += lex_escape();
        continue;
      }
      if (c == '\n' || c == '\r') fail("newline in string literal");
      out.push_back(c);
      advance();
    }
  }

  std::string lex_pname_raw() {
    std::string out;
    bool seen_colon = false;
    while (pos_ < text_.size()) {
      const unsigned char c = static_cast<unsigned char>(text_[pos_]);
      if (c == ':' && !seen_colon) {
        seen_colon = true;
        out.push_back(':');
        advance();
        continue;
      }
      if (std::isalnum(c) || c == '_' || c == '-') {
        out.push_back(static_cast<char>(c));
        advance();
        continue;
      }
      break;
    }
    if (!seen_colon) fail("expected a prefixed name");
    return out;
  }

 private:
  std::string lex_word() {
    std::string out;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      out.push_back(text_[pos_]);
      advance();
    }
    return out;
  }

  std::string lex_escape() {
    advance();  // backslash
    if (pos_ >= text_.size()) fail("dangling escape");
    const char c = text_[pos_];
    advance();
    switch (c) {
      case 't': return "\t";
      case 'b': return "\b";
      case 'n': return "\n";
      case 'r': return "\r";
      case 'f': return "\f";
      case '"': return "\"";
      case '\'': return "'";
      case '\\': return "\\";
      case 'u': return lex_unicode(4);
      case 'U': return lex_unicode(8);
      default: fail(std::string("unknown escape \\") + c);
    }
  }

  std::string lex_unicode(int digits) {
    unsigned long cp = 0;
    for (int i = 0; i < digits; ++i) {
      if (pos_ >= text_.size()) fail("truncated unicode escape");
      const char c = text_[pos_];
      int v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
      else fail("bad hex digit in unicode escape");
      cp = cp * 16 + static_cast<unsigned long>(v);
      advance();
    }
    std::string out;
    append_utf8(out, cp);
    return out;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

FaultGraph from_turtle(const std::string& text) {
  Lexer lex(text);
  std::map<std::string, std::string> prefixes;

  auto expand = [&prefixes, &lex](const std::string& pname, int line, int col) {
    const auto colon = pname.find(':');
    const std::string prefix = pname.substr(0, colon);
    const std::string local = pname.substr(colon + 1);
    const auto it = prefixes.find(prefix);
    if (it == prefixes.end())
      throw TurtleParseError(line, col, "unknown prefix '" + prefix + ":'");
    return it->second + local;
  };

  auto to_term = [&expand](const Token& tok) {
    switch (tok.kind) {
      case Token::Kind::iri: return Term::iri(tok.value);
      case Token::Kind::pname: return Term::iri(expand(tok.value, tok.line, tok.column));
      case Token::Kind::keyword_a: return Term::iri(kgns::rdf + "type");
      case Token::Kind::literal: {
        std::string dt;
        if (!tok.datatype.empty())
          dt = tok.datatype_is_iri ? tok.datatype : expand(tok.datatype, tok.line, tok.column);
        return Term::literal(tok.value, dt);
      }
      default: throw TurtleParseError(tok.line, tok.column, "expected a term");
    }
  };

  FaultGraph graph;
  while (!lex.eof()) {
    Token tok = lex.next();
    if (tok.kind == Token::Kind::eof) break;

    if (tok.kind == Token::Kind::prefix_directive) {
      const std::string label = lex.lex_prefix_label();
      Token iri = lex.next();
      if (iri.kind != Token::Kind::iri)
        throw TurtleParseError(iri.line, iri.column, "expected IRI in @prefix");
      Token dot = lex.next();
      if (dot.kind != Token::Kind::dot)
        throw TurtleParseError(dot.line, dot.column, "expected '.' after @prefix");
      prefixes[label] = iri.value;
      continue;
    }

    if (tok.kind != Token::Kind::iri && tok.kind != Token::Kind::pname)
      throw TurtleParseError(tok.line, tok.column, "expected a subject IRI");
    const Term subject = to_term(tok);

    bool statement_done = false;
    while (!statement_done) {  // predicate lists separated by ';'
      Token ptok = lex.next();
      if (ptok.kind != Token::Kind::iri && ptok.kind != Token::Kind::pname &&
          ptok.kind != Token::Kind::keyword_a)
        throw TurtleParseError(ptok.line, ptok.column, "expected a predicate");
      const Term predicate = to_term(ptok);

      bool predicate_done = false;
      while (!predicate_done) {  // object lists separated by ','
        Token otok = lex.next();
        const Term object = to_term(otok);
        graph.insert({subject, predicate, object});
        Token sep = lex.next();
        if (sep.kind == Token::Kind::comma) continue;
        if (sep.kind == Token::Kind::semicolon) {
          predicate_done = true;
        } else if (sep.kind == Token::Kind::dot) {
          predicate_done = true;
          statement_done = true;
        } else {
          throw TurtleParseError(sep.line, sep.column, "expected '.', ';' or ','");
        }
      }
    }
  }
  return graph;
}

}  // namespace tsd
