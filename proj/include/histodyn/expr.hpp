#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "histodyn/forms.hpp"

namespace histodyn {

class HMapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    // Grade errors also keep the bare message and the source position of the node.
    HMapError(const std::string& what, std::string bare, int line, int column)
        : std::runtime_error(what), bare(std::move(bare)), line(line), column(column) {}
    std::string bare;
    int line = 0, column = 0;
};

struct GradeSignature {
    int k = 0;  // vertical
    int R = 0;  // horizontal
    bool operator==(const GradeSignature&) const = default;
    std::string str() const { return "[" + std::to_string(k) + ";" + std::to_string(R) + "]"; }
};

// Field slots of a Hamiltonian history. Arg is the bound variable of a scalar function body.
enum class Field { C, P, Pi, X, Arg };

enum class Op {
    Const,
    Param,
    FieldC,
    FieldP,
    FieldPi,     // Pi_mu, index = mu
    FieldX,      // X^mu, index = mu
    Arg,         // argument of a scalar function definition
    CoordDiff,   // dx^mu, index = mu
    VolSlot,     // Vol_I, mask = I (0 for Vol)
    Star,
    Wedge,
    Sum,
    Neg,
    Pow,         // value = exponent
    ScalarFun,   // name, index = derivative order
    ExtD,        // d
    VertD,       // D
    VertBasis    // DY^A; field in `field`, index = mu for Pi / X
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;
    std::string name;
    int index = 0;
    Mask mask = 0;
    Field field = Field::C;
    std::vector<Expr> kids;
    int line = 0, column = 0;  // source position when parsed
};

namespace ex {
Expr constant(double v);
Expr param(const std::string& name);
Expr C();
Expr P();
Expr Pi(int mu);
Expr X(int mu);
Expr arg();
Expr dx(int mu);
Expr vol(Mask slots = 0);
Expr star(Expr a);
Expr wedge(Expr a, Expr b);
Expr sum(std::vector<Expr> terms);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr neg(Expr a);
Expr pow(Expr a, double e);
Expr fun(const std::string& name, Expr a, int order = 0);
Expr d(Expr a);
Expr D(Expr a);
Expr basis(Field f, int mu = 0);
}  // namespace ex

// A scalar function such as a potential U(C): body in terms of Op::Arg.
struct ScalarFunction {
    std::string arg_name;
    Expr body;
};

// What the symbolic layer needs to know about a model.
struct HMapContext {
    int n = 1;
    int r = 0;
    std::vector<int> signature;  // defaults to (+,-,...,-)
    std::map<std::string, double> params;
    std::map<std::string, ScalarFunction> functions;
    bool allow_d = true;  // d(.) in expressions (Lagrangians)

    int metric_sign() const;
    const std::vector<int>& sig() const;
    int field_grade(Field f) const;
};

bool is_builtin_function(const std::string& name);

// Bottom-up grade computation; throws HMapError on overflow, mismatch or unknown symbols.
GradeSignature infer_grade(const Expr& e, const HMapContext& ctx);

// Does the expression mention x-dependence (X^mu fields)?
bool mentions_coordinates(const Expr& e);

std::string describe(const Expr& e);

}  // namespace histodyn
