#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace pdelearn {

// Scalar computation graph. Nodes are recorded in topological order and carry
// a cached primal value. Supports one reverse sweep for parameter gradients
// and forward-mode tangent sweeps (order 1 and 2) for derivatives of network
// outputs with respect to network inputs; tangents are themselves graph
// nodes, so a reverse sweep differentiates through them.

enum class Op : std::uint8_t {
  Leaf,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  PowC,  // aux = constant exponent
  Exp,
  Log,
  Sin,
  Cos,
  Tanh,
  Sigmoid,
  Abs,
  Sign,
  Huber,  // aux = delta
  Min,
  Max,
};

struct Node {
  Op op;
  std::int32_t a = -1;
  std::int32_t b = -1;
  double aux = 0.0;
  double val = 0.0;
};

class Graph;

struct Expr {
  Graph* g = nullptr;
  std::int32_t id = -1;
};

class Graph {
 public:
  std::int32_t leaf(double v);
  std::int32_t constant(double v);
  std::int32_t emit(Op op, std::int32_t a, std::int32_t b = -1, double aux = 0.0);

  Expr leaf_expr(double v) { return {this, leaf(v)}; }
  Expr const_expr(double v) { return {this, constant(v)}; }
  Expr expr(std::int32_t id) { return {this, id}; }

  double value(std::int32_t id) const { return nodes_[id].val; }
  void set_leaf(std::int32_t id, double v);
  const Node& node(std::int32_t id) const { return nodes_[id]; }
  std::int32_t size() const { return static_cast<std::int32_t>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::int32_t>& leaves() const { return leaves_; }

  // Recomputes every non-leaf cached value in recording order. Uses the same
  // per-op kernel as emit, so unchanged leaves reproduce values bit-exactly.
  void reval();

  // d(out)/d(leaf) for each requested node, one reverse sweep.
  std::vector<double> gradient(std::int32_t out, std::span<const std::int32_t> wrt) const;

  // Node representing d^order(out)/d(seed)^order; appends tangent nodes.
  // seed must be a Leaf. order is 1 or 2.
  std::int32_t input_derivative(std::int32_t out, std::int32_t seed, int order);

  // Drops nodes unreachable from the given roots (leaves are always kept)
  // and renumbers. Returns the old->new id map (-1 for dropped nodes).
  std::vector<std::int32_t> compact(std::span<const std::int32_t> roots);

 private:
  struct Jet {
    int order = 0;
    std::int32_t swept = 0;  // nodes [0, swept) have been processed
    std::vector<std::int32_t> tan, sec;
  };

  void sweep_jet(Jet& jet, std::int32_t seed, std::int32_t upto, int order);
  std::int32_t helper(Op op, std::int32_t a);  // cached cos/sin/etc of a node

  std::vector<Node> nodes_;
  std::vector<std::int32_t> leaves_;
  std::unordered_map<std::uint64_t, std::int32_t> const_pool_;
  std::unordered_map<std::uint64_t, std::int32_t> helper_pool_;
  std::unordered_map<std::int32_t, Jet> jets_;
};

double eval_op(Op op, double a, double b, double aux);

// Expression sugar.
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr operator+(Expr a, double c);
Expr operator+(double c, Expr a);
Expr operator-(Expr a, double c);
Expr operator-(double c, Expr a);
Expr operator*(Expr a, double c);
Expr operator*(double c, Expr a);
Expr operator/(Expr a, double c);
Expr operator/(double c, Expr a);
Expr pow_c(Expr a, double p);
Expr exp(Expr a);
Expr log(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
Expr tanh(Expr a);
Expr sigmoid(Expr a);
Expr abs(Expr a);
Expr huber(Expr a, double delta);
Expr min(Expr a, Expr b);
Expr max(Expr a, Expr b);
Expr square(Expr a);

struct Recording {
  Graph graph;
  std::vector<std::int32_t> leaves;
  std::int32_t output = -1;
};

// Records the expression built by `build` over the given leaf values.
// Throws std::domain_error on non-finite leaves or invalid primitives.
Recording record(std::span<const double> leaf_values,
                 const std::function<Expr(Graph&, std::span<const std::int32_t>)>& build);

// Evaluates a fixed graph for a block of lanes (points) at once. The graph
// structure is shared and read-only; each lane has its own leaf values. Used
// to sweep one compiled residual graph over many collocation points.
class BlockEval {
 public:
  static constexpr int kLanes = 64;

  explicit BlockEval(const Graph& g);

  void broadcast(std::int32_t lf, double v);
  void set(std::int32_t lf, int lane, double v);
  void forward(std::int32_t upto);  // evaluates nodes [0, upto]
  void backward(std::int32_t out);  // adjoints of out w.r.t. everything, all lanes

  double value(std::int32_t id, int lane) const { return val_[static_cast<std::size_t>(id) * kLanes + lane]; }
  double adjoint(std::int32_t id, int lane) const { return adj_[static_cast<std::size_t>(id) * kLanes + lane]; }
  const double* lane_values(std::int32_t id) const { return &val_[static_cast<std::size_t>(id) * kLanes]; }
  const double* lane_adjoints(std::int32_t id) const { return &adj_[static_cast<std::size_t>(id) * kLanes]; }

 private:
  const Graph* g_;
  std::vector<double> val_, adj_;
};

}  // namespace pdelearn
