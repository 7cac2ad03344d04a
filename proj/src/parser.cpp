#include "ciex/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace ciex {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// ---------------------------------------------------------------------------
// Tokenizer for one logical statement.

struct Token {
  enum class Kind { Ident, String, LParen, RParen, LBracket, RBracket,
                    Comma, Equals, End };
  Kind kind;
  std::string text;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_ws();
    if (pos_ >= src_.size()) return {Token::Kind::End, ""};
    char c = src_[pos_];
    switch (c) {
      case '(': ++pos_; return {Token::Kind::LParen, "("};
      case ')': ++pos_; return {Token::Kind::RParen, ")"};
      case '[': ++pos_; return {Token::Kind::LBracket, "["};
      case ']': ++pos_; return {Token::Kind::RBracket, "]"};
      case ',': ++pos_; return {Token::Kind::Comma, ","};
      case '=': ++pos_; return {Token::Kind::Equals, "="};
      default: break;
    }
    if (c == '"' || c == '\'') return lex_string(c);
    if (is_ident_start(c)) {
      size_t start = pos_;
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      return {Token::Kind::Ident, src_.substr(start, pos_ - start)};
    }
    throw std::runtime_error(std::string("unexpected character '") + c + "'");
  }

private:
  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  Token lex_string(char quote) {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != quote) {
      char c = src_[pos_++];
      if (c == '\\' && pos_ < src_.size()) {
        char e = src_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          default: out.push_back(e); break;
        }
      } else {
        out.push_back(c);
      }
    }
    if (pos_ >= src_.size()) throw std::runtime_error("unterminated string");
    ++pos_;  // closing quote
    return {Token::Kind::String, out};
  }

  std::string src_;
  size_t pos_ = 0;
};

// Recursive-descent parser over the token stream.
class StatementParser {
public:
  explicit StatementParser(const std::string& src) : lexer_(src) { advance(); }

  DialectStatement parse() {
    DialectStatement stmt;
    expect(Token::Kind::Ident, "identifier");
    std::string first = cur_.text;
    advance();
    if (cur_.kind == Token::Kind::Equals) {
      advance();
      stmt.kind = DialectStatement::Kind::Assignment;
      stmt.var_name = first;
      stmt.call = std::make_shared<DialectCall>(parse_call_after_name());
    } else if (cur_.kind == Token::Kind::LParen) {
      stmt.kind = DialectStatement::Kind::BareCall;
      stmt.call = std::make_shared<DialectCall>(parse_call_body(first));
    } else {
      throw std::runtime_error("expected '=' or '(' after " + first);
    }
    if (cur_.kind != Token::Kind::End)
      throw std::runtime_error("trailing tokens after statement");
    return stmt;
  }

private:
  void advance() { cur_ = lexer_.next(); }

  void expect(Token::Kind kind, const char* what) {
    if (cur_.kind != kind)
      throw std::runtime_error(std::string("expected ") + what);
  }

  DialectCall parse_call_after_name() {
    expect(Token::Kind::Ident, "class name");
    std::string name = cur_.text;
    advance();
    expect(Token::Kind::LParen, "'('");
    return parse_call_body(name);
  }

  // cur_ is at '(' when called.
  DialectCall parse_call_body(std::string name) {
    DialectCall call;
    call.class_name = std::move(name);
    advance();  // consume '('
    if (cur_.kind == Token::Kind::RParen) {
      advance();
      return call;
    }
    while (true) {
      call.args.push_back(parse_arg());
      if (cur_.kind == Token::Kind::Comma) {
        advance();
        if (cur_.kind == Token::Kind::RParen) break;  // trailing comma
        continue;
      }
      break;
    }
    expect(Token::Kind::RParen, "')'");
    advance();
    return call;
  }

  DialectArg parse_arg() {
    DialectArg arg;
    if (cur_.kind == Token::Kind::Ident) {
      std::string ident = cur_.text;
      Lexer saved_lexer = lexer_;
      Token saved_cur = cur_;
      advance();
      if (cur_.kind == Token::Kind::Equals) {
        advance();
        arg.keyword = ident;
        arg.value = parse_value();
        return arg;
      }
      lexer_ = saved_lexer;
      cur_ = saved_cur;
    }
    arg.value = parse_value();
    return arg;
  }

  DialectValue parse_value() {
    DialectValue value;
    switch (cur_.kind) {
      case Token::Kind::String:
        value.kind = DialectValue::Kind::String;
        value.string_value = cur_.text;
        advance();
        return value;
      case Token::Kind::LBracket: {
        value.kind = DialectValue::Kind::List;
        advance();
        if (cur_.kind == Token::Kind::RBracket) {
          advance();
          return value;
        }
        while (true) {
          value.list_items.push_back(parse_value());
          if (cur_.kind == Token::Kind::Comma) {
            advance();
            if (cur_.kind == Token::Kind::RBracket) break;
            continue;
          }
          break;
        }
        expect(Token::Kind::RBracket, "']'");
        advance();
        return value;
      }
      case Token::Kind::Ident: {
        std::string name = cur_.text;
        advance();
        if (cur_.kind == Token::Kind::LParen) {
          value.kind = DialectValue::Kind::Call;
          value.call = std::make_shared<DialectCall>(parse_call_body(name));
        } else {
          value.kind = DialectValue::Kind::VarRef;
          value.string_value = name;
        }
        return value;
      }
      default:
        throw std::runtime_error("expected value");
    }
  }

  Lexer lexer_;
  Token cur_{Token::Kind::End, ""};
};

// Strips a trailing '#' comment, respecting string quoting.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

// Net bracket depth of a line, outside string literals.
int bracket_delta(const std::string& line) {
  int depth = 0;
  char quote = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '(' || c == '[') {
      ++depth;
    } else if (c == ')' || c == ']') {
      --depth;
    }
  }
  return depth;
}

bool parse_import_line(const std::string& text, DialectStatement& stmt) {
  std::istringstream in(text);
  std::string kw, base, import_kw;
  if (!(in >> kw) || kw != "from") return false;
  if (!(in >> base) || !(in >> import_kw) || import_kw != "import") return false;
  std::string rest;
  std::getline(in, rest);
  stmt.kind = DialectStatement::Kind::Import;
  stmt.import_base = base;
  std::string item;
  std::istringstream items(rest);
  while (std::getline(items, item, ',')) {
    item = trim(item);
    if (!item.empty()) stmt.import_names.push_back(item);
  }
  return true;
}

// "class Name(Base):" or "class Name:".
bool parse_class_header(const std::string& text, DialectStatement& stmt) {
  if (text.rfind("class ", 0) != 0) return false;
  std::string rest = trim(text.substr(6));
  if (rest.empty() || rest.back() != ':') return false;
  rest.pop_back();
  rest = trim(rest);
  std::string name, base;
  size_t paren = rest.find('(');
  if (paren != std::string::npos) {
    if (rest.back() != ')') return false;
    name = trim(rest.substr(0, paren));
    base = trim(rest.substr(paren + 1, rest.size() - paren - 2));
  } else {
    name = rest;
  }
  if (name.empty() || !is_ident_start(name[0])) return false;
  stmt.kind = DialectStatement::Kind::ClassDef;
  stmt.class_name = name;
  stmt.base_name = base;
  return true;
}

bool is_indented(const std::string& line) {
  return !line.empty() && (line[0] == ' ' || line[0] == '\t');
}

}  // namespace

std::string extract_code_region(const std::string& response) {
  std::vector<std::string> blocks;
  std::istringstream in(response);
  std::string line;
  std::string current;
  bool in_fence = false;
  bool saw_fence = false;
  while (std::getline(in, line)) {
    if (trim(line).rfind("```", 0) == 0) {
      if (in_fence) {
        blocks.push_back(current);
        current.clear();
      }
      in_fence = !in_fence;
      saw_fence = true;
      continue;
    }
    if (in_fence) current += line + "\n";
  }
  if (in_fence && !current.empty()) blocks.push_back(current);  // unclosed fence
  if (!saw_fence || blocks.empty()) return saw_fence ? "" : response;
  std::string out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += "\n";
    out += blocks[i];
  }
  return out;
}

std::pair<DialectAst, ParseDiagnostics> parse_program(const std::string& code) {
  DialectAst ast;
  ParseDiagnostics diags;

  std::vector<std::string> lines;
  {
    std::istringstream in(code);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }

  size_t i = 0;
  bool in_class_body = false;
  while (i < lines.size()) {
    const int line_no = static_cast<int>(i) + 1;
    std::string stripped = strip_comment(lines[i]);
    std::string text = trim(stripped);
    if (text.empty()) {
      ++i;
      continue;
    }

    // Triple-quoted block (instruction annotations): skip entirely.
    if (text.rfind("\"\"\"", 0) == 0 || text.rfind("'''", 0) == 0) {
      std::string delim = text.substr(0, 3);
      std::string rest = text.substr(3);
      ++i;
      if (rest.find(delim) != std::string::npos) continue;  // one-liner
      while (i < lines.size() && lines[i].find(delim) == std::string::npos) ++i;
      if (i < lines.size()) ++i;  // closing delimiter
      continue;
    }

    if (is_indented(lines[i]) && in_class_body) {
      // class body line (def, pass, self.x = ...); not an extraction
      ++i;
      continue;
    }

    DialectStatement stmt;
    stmt.line = line_no;
    if (parse_class_header(text, stmt)) {
      in_class_body = true;
      ast.statements.push_back(std::move(stmt));
      ++i;
      continue;
    }
    in_class_body = false;

    if (parse_import_line(text, stmt)) {
      ast.statements.push_back(std::move(stmt));
      ++i;
      continue;
    }

    // Assemble a logical statement across lines via bracket balancing.
    std::string logical = stripped;
    int depth = bracket_delta(stripped);
    size_t j = i + 1;
    while (depth > 0 && j < lines.size()) {
      std::string cont = strip_comment(lines[j]);
      logical += " " + cont;
      depth += bracket_delta(cont);
      ++j;
    }

    try {
      StatementParser parser(logical);
      stmt = parser.parse();
      stmt.line = line_no;
      ast.statements.push_back(std::move(stmt));
    } catch (const std::exception& e) {
      diags.skipped_lines.emplace_back(line_no, e.what());
    }
    i = j > i + 1 ? j : i + 1;
  }
  return {std::move(ast), std::move(diags)};
}

namespace {

std::string entity_key(const EntityMention& e) {
  return e.type + "\x1f" + e.text;
}
std::string relation_key(const RelationMention& r) {
  return r.type + "\x1f" + entity_key(r.head) + "\x1f" + entity_key(r.tail);
}
std::string event_key(const EventMention& ev) {
  std::string key = ev.type + "\x1f" + ev.trigger;
  std::vector<std::string> parts;
  for (const auto& a : ev.args) parts.push_back(a.role + "\x1e" + a.text);
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) key += "\x1f" + p;
  return key;
}

struct Binder {
  const Schema& schema;
  Task task;
  ExtractionSet out;
  ParseDiagnostics diags;
  std::map<std::string, EntityMention> vars;  // var name -> bound entity
  std::set<std::string> seen_entities, seen_relations, seen_events;

  bool family_allowed(TypeFamily f) const {
    switch (f) {
      case TypeFamily::Entity: return true;
      case TypeFamily::Relation: return task_uses_relations(task);
      case TypeFamily::Event: return task_uses_events(task);
    }
    return false;
  }

  void add_entity(const EntityMention& e) {
    if (seen_entities.insert(entity_key(e)).second) out.entities.push_back(e);
  }

  const std::string* string_arg(const DialectCall& call,
                                const std::string& keyword) const {
    for (const auto& a : call.args) {
      if (lower(a.keyword) == keyword &&
          a.value.kind == DialectValue::Kind::String)
        return &a.value.string_value;
    }
    for (const auto& a : call.args) {
      if (a.keyword.empty() && a.value.kind == DialectValue::Kind::String)
        return &a.value.string_value;
    }
    return nullptr;
  }

  // Resolves a head/tail value to an entity mention.
  std::optional<EntityMention> to_entity(const DialectValue& v, int line) {
    switch (v.kind) {
      case DialectValue::Kind::Call: {
        auto ref = try_resolve_alias(schema, v.call->class_name);
        if (!ref || ref->family != TypeFamily::Entity) {
          diags.bind_errors.emplace_back(
              line, "unknown entity class " + v.call->class_name);
          return std::nullopt;
        }
        const std::string* text = string_arg(*v.call, "name");
        if (!text) {
          diags.bind_errors.emplace_back(
              line, "entity " + v.call->class_name + " has no name argument");
          return std::nullopt;
        }
        return EntityMention{ref->name, *text, {}, {}, {}};
      }
      case DialectValue::Kind::VarRef: {
        auto it = vars.find(v.string_value);
        if (it == vars.end()) {
          diags.bind_errors.emplace_back(
              line, "unresolved variable " + v.string_value);
          return std::nullopt;
        }
        return it->second;
      }
      default:
        diags.bind_errors.emplace_back(line, "expected entity value");
        return std::nullopt;
    }
  }

  void bind_statement(const DialectStatement& stmt) {
    if (stmt.kind == DialectStatement::Kind::Import ||
        stmt.kind == DialectStatement::Kind::ClassDef)
      return;
    const DialectCall& call = *stmt.call;
    const int line = stmt.line;
    auto ref = try_resolve_alias(schema, call.class_name);
    if (!ref) {
      diags.bind_errors.emplace_back(line, "unknown class " + call.class_name);
      return;
    }
    if (!family_allowed(ref->family)) {
      diags.bind_errors.emplace_back(
          line, "class " + ref->name + " outside task " + to_string(task));
      return;
    }
    switch (ref->family) {
      case TypeFamily::Entity: {
        const std::string* text = string_arg(call, "name");
        if (!text) {
          diags.bind_errors.emplace_back(
              line, "entity " + ref->name + " has no name argument");
          return;
        }
        EntityMention e{ref->name, *text, {}, {}, {}};
        if (stmt.kind == DialectStatement::Kind::Assignment)
          vars[stmt.var_name] = e;
        add_entity(e);
        return;
      }
      case TypeFamily::Relation: {
        const DialectValue* head = nullptr;
        const DialectValue* tail = nullptr;
        std::vector<const DialectValue*> positional;
        for (const auto& a : call.args) {
          if (lower(a.keyword) == "head") head = &a.value;
          else if (lower(a.keyword) == "tail") tail = &a.value;
          else if (a.keyword.empty()) positional.push_back(&a.value);
        }
        // First two positional args map to head, tail in order.
        size_t p = 0;
        if (!head && p < positional.size()) head = positional[p++];
        if (!tail && p < positional.size()) tail = positional[p++];
        if (!head || !tail) {
          diags.bind_errors.emplace_back(
              line, "relation " + ref->name + " missing head/tail");
          return;
        }
        auto h = to_entity(*head, line);
        auto t = to_entity(*tail, line);
        if (!h || !t) return;
        add_entity(*h);
        add_entity(*t);
        RelationMention r{ref->name, *h, *t};
        if (seen_relations.insert(relation_key(r)).second)
          out.relations.push_back(std::move(r));
        return;
      }
      case TypeFamily::Event: {
        const EventTypeDef* def = schema.find_event(ref->name);
        EventMention ev;
        ev.type = ref->name;
        const std::string* trigger = string_arg(call, "trigger");
        if (!trigger) {
          diags.bind_errors.emplace_back(
              line, "event " + ref->name + " has no trigger argument");
          return;
        }
        ev.trigger = *trigger;
        for (const auto& a : call.args) {
          if (a.keyword.empty() || lower(a.keyword) == "trigger") continue;
          const RoleDef* role = nullptr;
          if (def) {
            for (const auto& r : def->roles)
              if (lower(r.name) == lower(a.keyword)) { role = &r; break; }
          }
          if (!role) {
            diags.bind_errors.emplace_back(
                line, "unknown role " + a.keyword + " on event " + ref->name);
            continue;
          }
          auto add_arg = [&](const DialectValue& v) {
            if (v.kind == DialectValue::Kind::String) {
              ev.args.push_back({role->name, v.string_value, {}});
            } else if (v.kind == DialectValue::Kind::Call) {
              const std::string* text = string_arg(*v.call, "name");
              if (text) ev.args.push_back({role->name, *text, {}});
              else
                diags.bind_errors.emplace_back(line, "unbindable argument for role " +
                                                         role->name);
            } else {
              diags.bind_errors.emplace_back(
                  line, "unbindable argument for role " + role->name);
            }
          };
          if (a.value.kind == DialectValue::Kind::List) {
            for (const auto& item : a.value.list_items) add_arg(item);
          } else {
            add_arg(a.value);
          }
        }
        if (seen_events.insert(event_key(ev)).second)
          out.events.push_back(std::move(ev));
        return;
      }
    }
  }
};

}  // namespace

std::pair<ExtractionSet, ParseDiagnostics> bind(const DialectAst& ast,
                                                const Schema& schema,
                                                Task task) {
  Binder binder{schema, task};
  for (const auto& stmt : ast.statements) binder.bind_statement(stmt);
  return {std::move(binder.out), std::move(binder.diags)};
}

std::pair<std::vector<std::string>, ParseDiagnostics> parse_import_completion(
    const std::string& response, const Schema& schema) {
  ParseDiagnostics diags;
  std::string code = extract_code_region(response);

  std::vector<std::string> raw_names;
  auto [ast, parse_diags] = parse_program(code);
  for (const auto& stmt : ast.statements) {
    if (stmt.kind == DialectStatement::Kind::Import) {
      raw_names = stmt.import_names;
      break;
    }
  }
  if (raw_names.empty()) {
    // Maybe the model emitted only the completion suffix: "Person, Location".
    std::istringstream in(code);
    std::string first_line;
    while (std::getline(in, first_line) && trim(first_line).empty()) {}
    std::istringstream items(first_line);
    std::string item;
    while (std::getline(items, item, ',')) {
      item = trim(item);
      if (!item.empty() && is_ident_start(item[0]) &&
          std::all_of(item.begin(), item.end(), is_ident_char))
        raw_names.push_back(item);
    }
  }

  std::vector<std::string> resolved;
  std::set<std::string> seen;
  for (const auto& name : raw_names) {
    auto ref = try_resolve_alias(schema, name);
    if (!ref) {
      diags.bind_errors.emplace_back(0, "unresolved type name " + name);
      continue;
    }
    if (seen.insert(lower(ref->name)).second) resolved.push_back(ref->name);
  }
  return {std::move(resolved), std::move(diags)};
}

std::string quote_dialect_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c); break;
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace ciex
