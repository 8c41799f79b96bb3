#include "safetree/code_export.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "safetree/error.hpp"
#include "safetree/pruning.hpp"

namespace safetree {

std::string c_identifier(std::string_view name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), '_');
  return out;
}

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> unique_identifiers(std::vector<std::string> names) {
  std::set<std::string> used;
  for (auto& n : names) {
    auto base = n;
    for (int k = 2; !used.insert(n).second; ++k) n = base + "_" + std::to_string(k);
  }
  return names;
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class Emitter {
 public:
  Emitter(const DecisionTree& tree, std::vector<std::string> params, std::vector<std::string> actions)
      : tree_(tree), params_(std::move(params)), actions_(std::move(actions)) {}

  void emit(std::size_t id, int depth) {
    const auto& nd = tree_.node(id);
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (nd.is_leaf()) {
      const auto pure = pure_actions(nd.stats);
      if (pure.empty()) throw ValidationError("leaf " + std::to_string(id) + " has no pure action");
      out_ << pad << "return " << actions_[pure.first()] << ";\n";
      return;
    }
    const auto& p = nd.predicate;
    const auto& var = params_[p.feature];
    out_ << pad << "if (";
    if (p.relation == Relation::equal) {
      out_ << var << " == " << number(p.threshold) << ") {\n";
    } else if (p.threshold == std::floor(p.threshold)) {
      out_ << var << " <= " << number(p.threshold) << ") {\n";
    } else if (2.0 * p.threshold == std::floor(2.0 * p.threshold)) {
      out_ << "2 * " << var << " <= " << number(2.0 * p.threshold) << ") { /* " << var << " <= "
           << number(p.threshold) << " */\n";
    } else {
      out_ << var << " <= " << number(p.threshold) << ") {\n";
    }
    emit(static_cast<std::size_t>(nd.left), depth + 1);
    out_ << pad << "} else {\n";
    emit(static_cast<std::size_t>(nd.right), depth + 1);
    out_ << pad << "}\n";
  }

  std::ostringstream out_;

 private:
  const DecisionTree& tree_;
  std::vector<std::string> params_;
  std::vector<std::string> actions_;
};

// Tokenizer and recursive-descent parser for the emitted subset.
struct Token {
  enum class Kind { identifier, number, symbol, end } kind;
  std::string text;
  std::size_t line;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (src.substr(i, 2) == "/*") {
      const auto close = src.find("*/", i + 2);
      if (close == std::string_view::npos) throw ParseError(line, "unterminated comment");
      for (auto k = i; k < close; ++k) line += src[k] == '\n';
      i = close + 2;
    } else if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const auto start = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      out.push_back({Token::Kind::identifier, std::string(src.substr(start, i - start)), line});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() && (std::isdigit(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '.')) ||
               c == '.') {
      const auto start = i++;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '.' ||
                                ((src[i] == '-' || src[i] == '+') && (src[i - 1] == 'e' || src[i - 1] == 'E'))))
        ++i;
      out.push_back({Token::Kind::number, std::string(src.substr(start, i - start)), line});
    } else if (src.substr(i, 2) == "<=" || src.substr(i, 2) == "==") {
      out.push_back({Token::Kind::symbol, std::string(src.substr(i, 2)), line});
      i += 2;
    } else if (std::string_view("{}();,=*").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::symbol, std::string(1, c), line});
      ++i;
    } else {
      throw ParseError(line, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::Kind::end, "", line});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  const Token& peek() const { return toks_[pos_]; }
  bool at(std::string_view text) const { return peek().kind != Token::Kind::end && peek().text == text; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  void expect(std::string_view text) {
    const auto t = next();
    if (t.text != text) throw ParseError(t.line, "expected '" + std::string(text) + "', found '" + t.text + "'");
  }
  std::string identifier() {
    const auto t = next();
    if (t.kind != Token::Kind::identifier) throw ParseError(t.line, "expected identifier, found '" + t.text + "'");
    return t.text;
  }
  double number() {
    const auto t = next();
    if (t.kind != Token::Kind::number) throw ParseError(t.line, "expected number, found '" + t.text + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument(t.text);
      return v;
    } catch (const std::exception&) {
      throw ParseError(t.line, "bad number '" + t.text + "'");
    }
  }
  std::size_t line() const { return peek().line; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string export_code(const DecisionTree& tree, const CodeExportOptions& options) {
  std::vector<std::string> params;
  for (const auto& f : tree.schema().features()) params.push_back(c_identifier(f.name));
  params = unique_identifiers(std::move(params));
  std::vector<std::string> actions;
  for (const auto& a : tree.alphabet().names()) actions.push_back(upper(c_identifier(a)));
  actions = unique_identifiers(std::move(actions));

  Emitter em(tree, params, actions);
  auto& out = em.out_;
  out << "/* Decision-tree controller: " << tree.size() << " nodes, " << tree.leaf_count() << " leaves.\n"
      << " * Returns the first allowed action of each leaf. */\n";
  out << "enum " << options.enum_name << " {";
  for (std::size_t a = 0; a < actions.size(); ++a) out << (a ? ", " : " ") << actions[a] << " = " << a;
  out << " };\n\n";
  out << "enum " << options.enum_name << " " << options.function_name << "(";
  for (std::size_t i = 0; i < params.size(); ++i) out << (i ? ", " : "") << "double " << params[i];
  out << ")\n{\n";
  em.emit(0, 1);
  out << "}\n";
  return out.str();
}

ExportedController ExportedController::parse(std::string_view source) {
  Parser ps(tokenize(source));
  ExportedController ctl;

  // enum <name> { A = 0, ... };
  ps.expect("enum");
  const auto enum_name = ps.identifier();
  ps.expect("{");
  while (!ps.at("}")) {
    ctl.action_names_.push_back(ps.identifier());
    ps.expect("=");
    const auto line = ps.line();
    const auto v = ps.number();
    if (v < 0 || v != std::floor(v)) throw ParseError(line, "enum values must be non-negative integers");
    ctl.action_values_.push_back(static_cast<std::size_t>(v));
    if (!ps.at("}")) ps.expect(",");
  }
  ps.expect("}");
  ps.expect(";");

  // enum <name> fn(double a, double b)
  ps.expect("enum");
  if (ps.identifier() != enum_name) throw ParseError(ps.line(), "return type must be the action enum");
  ctl.function_name_ = ps.identifier();
  ps.expect("(");
  while (!ps.at(")")) {
    ps.expect("double");
    ctl.parameters_.push_back(ps.identifier());
    if (!ps.at(")")) ps.expect(",");
  }
  ps.expect(")");

  auto param_index = [&](const std::string& name, std::size_t line) {
    for (std::size_t i = 0; i < ctl.parameters_.size(); ++i)
      if (ctl.parameters_[i] == name) return i;
    throw ParseError(line, "unknown variable '" + name + "'");
  };
  auto action_index = [&](const std::string& name, std::size_t line) {
    for (std::size_t i = 0; i < ctl.action_names_.size(); ++i)
      if (ctl.action_names_[i] == name) return i;
    throw ParseError(line, "unknown action '" + name + "'");
  };

  // Recursive descent; nesting depth equals tree depth.
  std::function<std::vector<std::size_t>()> block = [&]() {
    ps.expect("{");
    std::vector<std::size_t> ids;
    while (!ps.at("}")) {
      const auto line = ps.line();
      const auto kw = ps.identifier();
      Statement st;
      if (kw == "return") {
        st.kind = Statement::Kind::result;
        st.action = action_index(ps.identifier(), line);
        ps.expect(";");
      } else if (kw == "if") {
        st.kind = Statement::Kind::branch;
        ps.expect("(");
        if (ps.peek().kind == Token::Kind::number) {
          st.scale = ps.number();
          ps.expect("*");
        }
        st.parameter = param_index(ps.identifier(), line);
        const auto rel = ps.next();
        if (rel.text == "<=") {
          st.equality = false;
        } else if (rel.text == "==") {
          st.equality = true;
        } else {
          throw ParseError(rel.line, "expected '<=' or '=='");
        }
        st.literal = ps.number();
        ps.expect(")");
        st.then_block = block();
        if (ps.at("else")) {
          ps.next();
          st.else_block = block();
        }
      } else {
        throw ParseError(line, "unexpected '" + kw + "'");
      }
      ctl.statements_.push_back(std::move(st));
      ids.push_back(ctl.statements_.size() - 1);
    }
    ps.expect("}");
    return ids;
  };
  ctl.body_ = block();
  if (ps.peek().kind != Token::Kind::end) throw ParseError(ps.line(), "trailing text after function");
  return ctl;
}

std::size_t ExportedController::evaluate(std::span<const double> args) const {
  if (args.size() != parameters_.size()) throw ValidationError("argument count does not match the function");
  // (block, next statement) frames; falling off a nested block resumes the enclosing one.
  std::vector<std::pair<const std::vector<std::size_t>*, std::size_t>> frames{{&body_, 0}};
  while (!frames.empty()) {
    auto& [blk, i] = frames.back();
    if (i >= blk->size()) {
      frames.pop_back();
      continue;
    }
    const auto& st = statements_[(*blk)[i++]];
    if (st.kind == Statement::Kind::result) return action_values_[st.action];
    const double lhs = st.scale * args[st.parameter];
    const bool taken = st.equality ? lhs == st.literal : lhs <= st.literal;
    frames.emplace_back(taken ? &st.then_block : &st.else_block, 0);
  }
  throw ValidationError("control reaches the end of the function without a return");
}

const std::string& ExportedController::evaluate_name(std::span<const double> args) const {
  const auto v = evaluate(args);
  for (std::size_t i = 0; i < action_values_.size(); ++i)
    if (action_values_[i] == v) return action_names_[i];
  throw ValidationError("returned value outside the enum");
}

std::size_t ExportedController::if_count() const {
  std::size_t n = 0;
  for (const auto& s : statements_) n += s.kind == Statement::Kind::branch;
  return n;
}

std::size_t ExportedController::return_count() const { return statements_.size() - if_count(); }

}  // namespace safetree
