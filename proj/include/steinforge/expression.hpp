#pragma once

// Small arithmetic expression grammar for user-supplied densities:
//   +, -, *, /, pow(a,b), exp(a), log(a), sqrt(a), abs(a), indicator(a)
// with variables x and theta, params p0..p9, and the constants pi and e.
// indicator(a) evaluates to 1 when a >= 0 and to 0 otherwise.

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "steinforge/errors.hpp"

namespace steinforge {

class Expression {
  public:
    struct Env {
        double x = 0.0;
        double theta = 0.0;
        std::span<const double> params;
    };

    static Expression parse(const std::string& text) {
        Parser p{text, 0};
        Expression e;
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw InputError("expression: unexpected trailing input at position " +
                             std::to_string(p.pos));
        return e;
    }

    double eval(const Env& env) const { return root_->eval(env); }

    double operator()(double x, double theta, std::span<const double> params = {}) const {
        return eval({x, theta, params});
    }

  private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(const Env&) const = 0;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Constant : Node {
        double v;
        explicit Constant(double c) : v(c) {}
        double eval(const Env&) const override { return v; }
    };
    struct VarX : Node {
        double eval(const Env& e) const override { return e.x; }
    };
    struct VarTheta : Node {
        double eval(const Env& e) const override { return e.theta; }
    };
    struct Param : Node {
        std::size_t i;
        explicit Param(std::size_t k) : i(k) {}
        double eval(const Env& e) const override {
            if (i >= e.params.size())
                throw InputError("expression: parameter p" + std::to_string(i) +
                                 " referenced but not provided");
            return e.params[i];
        }
    };
    struct Binary : Node {
        char op;
        NodePtr a, b;
        Binary(char o, NodePtr l, NodePtr r) : op(o), a(std::move(l)), b(std::move(r)) {}
        double eval(const Env& e) const override {
            const double l = a->eval(e), r = b->eval(e);
            switch (op) {
                case '+': return l + r;
                case '-': return l - r;
                case '*': return l * r;
                default:  return l / r;
            }
        }
    };
    struct Negate : Node {
        NodePtr a;
        explicit Negate(NodePtr n) : a(std::move(n)) {}
        double eval(const Env& e) const override { return -a->eval(e); }
    };
    struct Call : Node {
        enum class Fn { exp, log, sqrt, abs, indicator, pow } fn;
        NodePtr a, b;
        double eval(const Env& e) const override {
            const double u = a->eval(e);
            switch (fn) {
                case Fn::exp: return std::exp(u);
                case Fn::log: return std::log(u);
                case Fn::sqrt: return std::sqrt(u);
                case Fn::abs: return std::fabs(u);
                case Fn::indicator: return u >= 0.0 ? 1.0 : 0.0;
                case Fn::pow: return std::pow(u, b->eval(e));
            }
            return 0.0;
        }
    };

    struct Parser {
        const std::string& s;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) { ++pos; return true; }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) {
            throw InputError("expression: " + what + " at position " + std::to_string(pos));
        }

        NodePtr parse_expr() {
            NodePtr lhs = parse_term();
            for (;;) {
                if (eat('+')) lhs = std::make_shared<Binary>('+', lhs, parse_term());
                else if (eat('-')) lhs = std::make_shared<Binary>('-', lhs, parse_term());
                else return lhs;
            }
        }
        NodePtr parse_term() {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (eat('*')) lhs = std::make_shared<Binary>('*', lhs, parse_unary());
                else if (eat('/')) lhs = std::make_shared<Binary>('/', lhs, parse_unary());
                else return lhs;
            }
        }
        NodePtr parse_unary() {
            if (eat('-')) return std::make_shared<Negate>(parse_unary());
            return parse_primary();
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr inner = parse_expr();
                if (!eat(')')) fail("expected ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
            fail(std::string("unexpected character '") + c + "'");
        }
        NodePtr parse_number() {
            std::size_t consumed = 0;
            double v;
            try {
                v = std::stod(s.substr(pos), &consumed);
            } catch (const std::exception&) {
                fail("malformed number");
            }
            pos += consumed;
            return std::make_shared<Constant>(v);
        }
        NodePtr parse_ident() {
            const std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string name = s.substr(start, pos - start);

            if (eat('(')) {
                using Fn = Call::Fn;
                auto call = std::make_shared<Call>();
                if (name == "exp") call->fn = Fn::exp;
                else if (name == "log") call->fn = Fn::log;
                else if (name == "sqrt") call->fn = Fn::sqrt;
                else if (name == "abs") call->fn = Fn::abs;
                else if (name == "indicator") call->fn = Fn::indicator;
                else if (name == "pow") call->fn = Fn::pow;
                else fail("unknown function '" + name + "'");
                call->a = parse_expr();
                if (call->fn == Fn::pow) {
                    if (!eat(',')) fail("pow expects two arguments");
                    call->b = parse_expr();
                }
                if (!eat(')')) fail("expected ')'");
                return call;
            }

            if (name == "x") return std::make_shared<VarX>();
            if (name == "theta") return std::make_shared<VarTheta>();
            if (name == "pi") return std::make_shared<Constant>(3.14159265358979323846);
            if (name == "e") return std::make_shared<Constant>(2.71828182845904523536);
            if (name.size() >= 2 && name[0] == 'p' &&
                std::isdigit(static_cast<unsigned char>(name[1]))) {
                try {
                    return std::make_shared<Param>(std::stoul(name.substr(1)));
                } catch (const std::exception&) {
                    fail("malformed parameter reference '" + name + "'");
                }
            }
            fail("unknown identifier '" + name + "'");
        }
    };

    NodePtr root_;
};

} // namespace steinforge
