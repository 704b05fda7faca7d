#pragma once

// Row predicates for geographic-style splits, e.g.
//
//   latitude >= 35 and (longitude < -120 or population > 1000)
//
// Grammar:  expr := conj ("or" conj)* ; conj := atom ("and" atom)* ;
//           atom := NAME OP NUMBER | "(" expr ")" ; OP := < <= > >= == !=
// "&&" and "||" are accepted as spellings of "and" and "or".

#include <cctype>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bcf/csv.hpp"
#include "bcf/errors.hpp"

namespace bcf::experiments {

class Predicate {
 public:
  enum class Op { lt, le, gt, ge, eq, ne };

  static Predicate parse(const std::string &text) {
    Parser parser(text);
    Predicate p;
    p.root_ = parser.parse();
    return p;
  }

  /// Mask of rows satisfying the predicate.
  std::vector<bool> evaluate(const CsvTable &table) const {
    std::vector<bool> mask(static_cast<std::size_t>(table.data.rows()));
    const Bound bound = bind(*root_, table);
    for (Index i = 0; i < table.data.rows(); ++i) mask[static_cast<std::size_t>(i)] = eval(bound, table.data.row(i));
    return mask;
  }

 private:
  struct Node {
    enum class Kind { compare, conj, disj } kind = Kind::compare;
    std::string column;
    Op op = Op::lt;
    double value = 0.0;
    std::unique_ptr<Node> lhs;
    std::unique_ptr<Node> rhs;
  };

  struct Bound {
    Node::Kind kind = Node::Kind::compare;
    Index column = -1;
    Op op = Op::lt;
    double value = 0.0;
    std::vector<Bound> children;
  };

  static Bound bind(const Node &n, const CsvTable &t) {
    Bound b;
    b.kind = n.kind;
    if (n.kind == Node::Kind::compare) {
      b.column = t.column(n.column);
      b.op = n.op;
      b.value = n.value;
    } else {
      b.children.push_back(bind(*n.lhs, t));
      b.children.push_back(bind(*n.rhs, t));
    }
    return b;
  }

  static bool eval(const Bound &b, const Eigen::Ref<const Eigen::RowVectorXd> &row) {
    switch (b.kind) {
      case Node::Kind::conj:
        return eval(b.children[0], row) && eval(b.children[1], row);
      case Node::Kind::disj:
        return eval(b.children[0], row) || eval(b.children[1], row);
      case Node::Kind::compare:
        break;
    }
    const double x = row(b.column);
    switch (b.op) {
      case Op::lt: return x < b.value;
      case Op::le: return x <= b.value;
      case Op::gt: return x > b.value;
      case Op::ge: return x >= b.value;
      case Op::eq: return x == b.value;
      case Op::ne: return x != b.value;
    }
    return false;
  }

  class Parser {
   public:
    explicit Parser(std::string text) : text_(std::move(text)) {}

    std::unique_ptr<Node> parse() {
      auto node = parse_or();
      skip_space();
      if (pos_ != text_.size()) fail("unexpected '" + text_.substr(pos_) + "'");
      return node;
    }

   private:
    std::unique_ptr<Node> parse_or() {
      auto lhs = parse_and();
      while (accept_word("or") || accept("||")) {
        auto node = std::make_unique<Node>();
        node->kind = Node::Kind::disj;
        node->lhs = std::move(lhs);
        node->rhs = parse_and();
        lhs = std::move(node);
      }
      return lhs;
    }

    std::unique_ptr<Node> parse_and() {
      auto lhs = parse_atom();
      while (accept_word("and") || accept("&&")) {
        auto node = std::make_unique<Node>();
        node->kind = Node::Kind::conj;
        node->lhs = std::move(lhs);
        node->rhs = parse_atom();
        lhs = std::move(node);
      }
      return lhs;
    }

    std::unique_ptr<Node> parse_atom() {
      if (accept("(")) {
        auto inner = parse_or();
        if (!accept(")")) fail("missing ')'");
        return inner;
      }
      auto node = std::make_unique<Node>();
      node->column = identifier();
      if (accept("<=")) {
        node->op = Op::le;
      } else if (accept(">=")) {
        node->op = Op::ge;
      } else if (accept("==")) {
        node->op = Op::eq;
      } else if (accept("!=")) {
        node->op = Op::ne;
      } else if (accept("<")) {
        node->op = Op::lt;
      } else if (accept(">")) {
        node->op = Op::gt;
      } else {
        fail("expected a comparison operator after '" + node->column + "'");
      }
      node->value = number();
      return node;
    }

    std::string identifier() {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.')) {
        ++pos_;
      }
      if (start == pos_) fail("expected a column name");
      return text_.substr(start, pos_ - start);
    }

    double number() {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                     std::string_view("+-.eE").find(text_[pos_]) != std::string_view::npos)) {
        ++pos_;
      }
      double v = 0.0;
      if (!parse_double(std::string_view(text_).substr(start, pos_ - start), v)) fail("expected a number");
      return v;
    }

    bool accept(std::string_view token) {
      skip_space();
      if (text_.compare(pos_, token.size(), token) == 0) {
        pos_ += token.size();
        return true;
      }
      return false;
    }

    bool accept_word(std::string_view word) {
      skip_space();
      if (text_.compare(pos_, word.size(), word) != 0) return false;
      const std::size_t end = pos_ + word.size();
      if (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
        return false;
      }
      pos_ = end;
      return true;
    }

    void skip_space() {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string &what) const {
      throw config_error("predicate '" + text_ + "': " + what);
    }

    std::string text_;
    std::size_t pos_ = 0;
  };

  std::shared_ptr<const Node> root_;
};

}  // namespace bcf::experiments
