#include "pdelearn/autodiff.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace pdelearn {

namespace {

inline double huber_val(double r, double delta) {
  double a = std::fabs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double sign_val(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline std::uint64_t key_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

double eval_op(Op op, double a, double b, double aux) {
  switch (op) {
    case Op::Leaf:
    case Op::Const:
      return a;  // unused
    case Op::Add:
      return a + b;
    case Op::Sub:
      return a - b;
    case Op::Mul:
      return a * b;
    case Op::Div:
      return a / b;
    case Op::Neg:
      return -a;
    case Op::PowC:
      return std::pow(a, aux);
    case Op::Exp:
      return std::exp(a);
    case Op::Log:
      return std::log(a);
    case Op::Sin:
      return std::sin(a);
    case Op::Cos:
      return std::cos(a);
    case Op::Tanh:
      return std::tanh(a);
    case Op::Sigmoid:
      return 1.0 / (1.0 + std::exp(-a));
    case Op::Abs:
      return std::fabs(a);
    case Op::Sign:
      return sign_val(a);
    case Op::Huber:
      return huber_val(a, aux);
    case Op::Min:
      return a <= b ? a : b;
    case Op::Max:
      return a >= b ? a : b;
  }
  return 0.0;
}

std::int32_t Graph::leaf(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite leaf value");
  Node n{Op::Leaf};
  n.val = v;
  nodes_.push_back(n);
  std::int32_t id = size() - 1;
  leaves_.push_back(id);
  return id;
}

std::int32_t Graph::constant(double v) {
  auto [it, inserted] = const_pool_.try_emplace(key_bits(v), size());
  if (!inserted) return it->second;
  Node n{Op::Const};
  n.val = v;
  nodes_.push_back(n);
  return size() - 1;
}

void Graph::set_leaf(std::int32_t id, double v) {
  if (nodes_[id].op != Op::Leaf) throw std::invalid_argument("set_leaf on non-leaf node");
  nodes_[id].val = v;
}

std::int32_t Graph::emit(Op op, std::int32_t a, std::int32_t b, double aux) {
  if (op == Op::Leaf || op == Op::Const) throw std::invalid_argument("emit on leaf/const");
  if (a < 0 || a >= size() || (b >= size()))
    throw std::invalid_argument("operand id out of range");
  const Node& na = nodes_[a];
  bool a_const = na.op == Op::Const;
  bool b_const = b >= 0 && nodes_[b].op == Op::Const;

  // Peepholes keep tangent sweeps from bloating the graph.
  if (op == Op::Add) {
    if (a_const && na.val == 0.0) return b;
    if (b_const && nodes_[b].val == 0.0) return a;
  } else if (op == Op::Sub) {
    if (b_const && nodes_[b].val == 0.0) return a;
  } else if (op == Op::Mul) {
    if (a_const && na.val == 1.0) return b;
    if (b_const && nodes_[b].val == 1.0) return a;
    if ((a_const && na.val == 0.0) || (b_const && nodes_[b].val == 0.0)) return constant(0.0);
  } else if (op == Op::Div) {
    if (b_const && nodes_[b].val == 1.0) return a;
  }

  bool binary = b >= 0;
  if (a_const && (!binary || b_const)) {
    double v = eval_op(op, na.val, binary ? nodes_[b].val : 0.0, aux);
    if (op == Op::Log && na.val <= 0.0) throw std::domain_error("log of non-positive constant");
    return constant(v);
  }

  Node n{op, a, b, aux};
  n.val = eval_op(op, na.val, binary ? nodes_[b].val : 0.0, aux);
  if (op == Op::Log && !(nodes_[a].val > 0.0)) throw std::domain_error("log of non-positive value");
  nodes_.push_back(n);
  return size() - 1;
}

void Graph::reval() {
  for (auto& n : nodes_) {
    if (n.op == Op::Leaf || n.op == Op::Const) continue;
    n.val = eval_op(n.op, nodes_[n.a].val, n.b >= 0 ? nodes_[n.b].val : 0.0, n.aux);
  }
}

std::vector<double> Graph::gradient(std::int32_t out, std::span<const std::int32_t> wrt) const {
  if (out < 0 || out >= size()) throw std::invalid_argument("output id not in graph");
  std::vector<double> adj(static_cast<std::size_t>(out) + 1, 0.0);
  adj[out] = 1.0;
  for (std::int32_t i = out; i >= 0; --i) {
    double w = adj[i];
    if (w == 0.0) continue;
    const Node& n = nodes_[i];
    double av = n.a >= 0 ? nodes_[n.a].val : 0.0;
    double bv = n.b >= 0 ? nodes_[n.b].val : 0.0;
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Add:
        adj[n.a] += w;
        adj[n.b] += w;
        break;
      case Op::Sub:
        adj[n.a] += w;
        adj[n.b] -= w;
        break;
      case Op::Mul:
        adj[n.a] += w * bv;
        adj[n.b] += w * av;
        break;
      case Op::Div:
        adj[n.a] += w / bv;
        adj[n.b] -= w * n.val / bv;
        break;
      case Op::Neg:
        adj[n.a] -= w;
        break;
      case Op::PowC:
        adj[n.a] += w * n.aux * std::pow(av, n.aux - 1.0);
        break;
      case Op::Exp:
        adj[n.a] += w * n.val;
        break;
      case Op::Log:
        adj[n.a] += w / av;
        break;
      case Op::Sin:
        adj[n.a] += w * std::cos(av);
        break;
      case Op::Cos:
        adj[n.a] -= w * std::sin(av);
        break;
      case Op::Tanh:
        adj[n.a] += w * (1.0 - n.val * n.val);
        break;
      case Op::Sigmoid:
        adj[n.a] += w * n.val * (1.0 - n.val);
        break;
      case Op::Abs:
        adj[n.a] += w * sign_val(av);
        break;
      case Op::Sign:
        break;
      case Op::Huber:
        adj[n.a] += w * std::fmin(std::fmax(av, -n.aux), n.aux);
        break;
      case Op::Min:
        adj[av <= bv ? n.a : n.b] += w;
        break;
      case Op::Max:
        adj[av >= bv ? n.a : n.b] += w;
        break;
    }
  }
  std::vector<double> out_grads(wrt.size());
  for (std::size_t k = 0; k < wrt.size(); ++k)
    out_grads[k] = wrt[k] <= out ? adj[wrt[k]] : 0.0;
  return out_grads;
}

std::int32_t Graph::helper(Op op, std::int32_t a) {
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(op)) << 32) |
                      static_cast<std::uint32_t>(a);
  auto it = helper_pool_.find(key);
  if (it != helper_pool_.end()) return it->second;
  std::int32_t id = emit(op, a);
  helper_pool_.emplace(key, id);
  return id;
}

void Graph::sweep_jet(Jet& jet, std::int32_t seed, std::int32_t upto, int order) {
  auto& tan = jet.tan;
  auto& sec = jet.sec;
  const bool second = order >= 2;

  auto addz = [&](std::int32_t x, std::int32_t y) {
    if (x < 0) return y;
    if (y < 0) return x;
    return emit(Op::Add, x, y);
  };
  auto subz = [&](std::int32_t x, std::int32_t y) {
    if (y < 0) return x;
    if (x < 0) return emit(Op::Neg, y);
    return emit(Op::Sub, x, y);
  };
  auto mulz = [&](std::int32_t x, std::int32_t y) -> std::int32_t {
    if (x < 0 || y < 0) return -1;
    return emit(Op::Mul, x, y);
  };
  auto divz = [&](std::int32_t x, std::int32_t y) -> std::int32_t {
    if (x < 0) return -1;
    return emit(Op::Div, x, y);
  };
  auto negz = [&](std::int32_t x) -> std::int32_t { return x < 0 ? -1 : emit(Op::Neg, x); };

  for (std::int32_t i = jet.swept; i <= upto; ++i) {
    tan.resize(std::max<std::size_t>(tan.size(), i + 1), -1);
    sec.resize(std::max<std::size_t>(sec.size(), i + 1), -1);
    const Node n = nodes_[i];  // copy: emit may reallocate
    if (i == seed) {
      tan[i] = constant(1.0);
      sec[i] = -1;
      continue;
    }
    std::int32_t ta = n.a >= 0 ? tan[n.a] : -1;
    std::int32_t tb = n.b >= 0 ? tan[n.b] : -1;
    std::int32_t sa = n.a >= 0 ? sec[n.a] : -1;
    std::int32_t sb = n.b >= 0 ? sec[n.b] : -1;
    std::int32_t t = -1, s = -1;
    switch (n.op) {
      case Op::Leaf:
      case Op::Const:
        break;
      case Op::Add:
        t = addz(ta, tb);
        if (second) s = addz(sa, sb);
        break;
      case Op::Sub:
        t = subz(ta, tb);
        if (second) s = subz(sa, sb);
        break;
      case Op::Neg:
        t = negz(ta);
        if (second) s = negz(sa);
        break;
      case Op::Mul:
        t = addz(mulz(ta, n.b), mulz(n.a, tb));
        if (second)
          s = addz(addz(mulz(sa, n.b), mulz(n.a, sb)),
                   mulz(constant(2.0), mulz(ta, tb)));
        break;
      case Op::Div: {
        t = divz(subz(ta, mulz(i, tb)), n.b);
        if (second)
          s = divz(subz(sa, addz(mulz(constant(2.0), mulz(t, tb)), mulz(i, sb))), n.b);
        break;
      }
      case Op::PowC: {
        if (ta >= 0 || sa >= 0) {
          std::int32_t pm1 = emit(Op::PowC, n.a, -1, n.aux - 1.0);
          std::int32_t d1 = emit(Op::Mul, constant(n.aux), pm1);
          t = mulz(d1, ta);
          if (second) {
            std::int32_t pm2 = emit(Op::PowC, n.a, -1, n.aux - 2.0);
            std::int32_t d2 = emit(Op::Mul, constant(n.aux * (n.aux - 1.0)), pm2);
            s = addz(mulz(d2, mulz(ta, ta)), mulz(d1, sa));
          }
        }
        break;
      }
      case Op::Exp:
        t = mulz(i, ta);
        if (second) s = mulz(i, addz(sa, mulz(ta, ta)));
        break;
      case Op::Log:
        t = divz(ta, n.a);
        if (second) s = divz(subz(sa, mulz(ta, t)), n.a);
        break;
      case Op::Sin: {
        if (ta >= 0 || sa >= 0) {
          std::int32_t c = helper(Op::Cos, n.a);
          t = mulz(c, ta);
          if (second) s = subz(mulz(c, sa), mulz(i, mulz(ta, ta)));
        }
        break;
      }
      case Op::Cos: {
        if (ta >= 0 || sa >= 0) {
          std::int32_t sn = helper(Op::Sin, n.a);
          t = negz(mulz(sn, ta));
          if (second) s = negz(addz(mulz(sn, sa), mulz(i, mulz(ta, ta))));
        }
        break;
      }
      case Op::Tanh: {
        // w = 1 - v^2, cached per node
        if (ta >= 0 || sa >= 0) {
          std::uint64_t key = (static_cast<std::uint64_t>(200) << 32) | static_cast<std::uint32_t>(i);
          std::int32_t w;
          auto it = helper_pool_.find(key);
          if (it != helper_pool_.end()) {
            w = it->second;
          } else {
            w = emit(Op::Sub, constant(1.0), emit(Op::Mul, i, i));
            helper_pool_.emplace(key, w);
          }
          t = mulz(w, ta);
          if (second)
            s = subz(mulz(w, sa), mulz(constant(2.0), mulz(i, mulz(t, ta))));
        }
        break;
      }
      case Op::Sigmoid: {
        if (ta >= 0 || sa >= 0) {
          std::uint64_t key = (static_cast<std::uint64_t>(201) << 32) | static_cast<std::uint32_t>(i);
          std::int32_t w;
          auto it = helper_pool_.find(key);
          if (it != helper_pool_.end()) {
            w = it->second;
          } else {
            w = emit(Op::Mul, i, emit(Op::Sub, constant(1.0), i));
            helper_pool_.emplace(key, w);
          }
          t = mulz(w, ta);
          if (second) {
            std::int32_t one_m_2v = emit(Op::Sub, constant(1.0), emit(Op::Mul, constant(2.0), i));
            s = addz(mulz(w, sa), mulz(one_m_2v, mulz(t, ta)));
          }
        }
        break;
      }
      case Op::Abs: {
        if (ta >= 0 || sa >= 0) {
          std::int32_t sg = helper(Op::Sign, n.a);
          t = mulz(sg, ta);
          if (second) s = mulz(sg, sa);
        }
        break;
      }
      case Op::Sign:
        break;  // zero derivative a.e.
      case Op::Huber: {
        if (ta >= 0 || sa >= 0) {
          std::int32_t lo = constant(-n.aux), hi = constant(n.aux);
          std::int32_t hp = emit(Op::Min, emit(Op::Max, n.a, lo), hi);
          t = mulz(hp, ta);
          if (second) {
            // indicator of the quadratic branch (0.5 exactly at the kink)
            std::int32_t ind = emit(
                Op::Mul, constant(0.5),
                emit(Op::Add, constant(1.0),
                     emit(Op::Sign, emit(Op::Sub, hi, emit(Op::Abs, n.a)))));
            s = addz(mulz(hp, sa), mulz(ind, mulz(ta, ta)));
          }
        }
        break;
      }
      case Op::Min:
      case Op::Max: {
        if (ta >= 0 || tb >= 0 || sa >= 0 || sb >= 0) {
          std::int32_t diff = n.op == Op::Min ? emit(Op::Sub, n.b, n.a) : emit(Op::Sub, n.a, n.b);
          std::int32_t w = emit(Op::Mul, constant(0.5),
                                emit(Op::Add, constant(1.0), emit(Op::Sign, diff)));
          std::int32_t wc = emit(Op::Sub, constant(1.0), w);
          t = addz(mulz(w, ta), mulz(wc, tb));
          if (second) s = addz(mulz(w, sa), mulz(wc, sb));
        }
        break;
      }
    }
    tan[i] = t;
    sec[i] = s;
  }
  jet.swept = upto + 1;
  jet.order = std::max(jet.order, order);
}

std::int32_t Graph::input_derivative(std::int32_t out, std::int32_t seed, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("derivative order must be 1 or 2");
  if (seed < 0 || seed >= size() || nodes_[seed].op != Op::Leaf)
    throw std::invalid_argument("seed must be a leaf");
  if (out < 0 || out >= size()) throw std::invalid_argument("output id not in graph");
  Jet& jet = jets_[seed];
  if (order > jet.order && jet.swept > 0) {
    // Re-sweep from scratch with second-order propagation.
    jet = Jet{};
  }
  if (jet.swept <= out) sweep_jet(jet, seed, out, order);
  std::int32_t id = order == 1 ? jet.tan[out] : jet.sec[out];
  return id >= 0 ? id : constant(0.0);
}

std::vector<std::int32_t> Graph::compact(std::span<const std::int32_t> roots) {
  std::vector<char> keep(nodes_.size(), 0);
  for (auto r : roots) {
    if (r < 0 || r >= size()) throw std::invalid_argument("compact root out of range");
    keep[r] = 1;
  }
  for (auto lf : leaves_) keep[lf] = 1;
  for (std::int32_t i = size() - 1; i >= 0; --i) {
    if (!keep[i]) continue;
    const Node& n = nodes_[i];
    if (n.a >= 0) keep[n.a] = 1;
    if (n.b >= 0) keep[n.b] = 1;
  }
  std::vector<std::int32_t> remap(nodes_.size(), -1);
  std::vector<Node> kept;
  kept.reserve(nodes_.size());
  for (std::int32_t i = 0; i < size(); ++i) {
    if (!keep[i]) continue;
    Node n = nodes_[i];
    if (n.a >= 0) n.a = remap[n.a];
    if (n.b >= 0) n.b = remap[n.b];
    remap[i] = static_cast<std::int32_t>(kept.size());
    kept.push_back(n);
  }
  nodes_ = std::move(kept);
  for (auto& lf : leaves_) lf = remap[lf];
  const_pool_.clear();
  helper_pool_.clear();
  jets_.clear();
  for (std::int32_t i = 0; i < size(); ++i)
    if (nodes_[i].op == Op::Const) const_pool_.try_emplace(key_bits(nodes_[i].val), i);
  return remap;
}

namespace {
inline Expr bin(Op op, Expr a, Expr b) { return {a.g, a.g->emit(op, a.id, b.id)}; }
inline Expr un(Op op, Expr a, double aux = 0.0) { return {a.g, a.g->emit(op, a.id, -1, aux)}; }
inline Expr cst(Expr ref, double c) { return {ref.g, ref.g->constant(c)}; }
}  // namespace

Expr operator+(Expr a, Expr b) { return bin(Op::Add, a, b); }
Expr operator-(Expr a, Expr b) { return bin(Op::Sub, a, b); }
Expr operator*(Expr a, Expr b) { return bin(Op::Mul, a, b); }
Expr operator/(Expr a, Expr b) { return bin(Op::Div, a, b); }
Expr operator-(Expr a) { return un(Op::Neg, a); }
Expr operator+(Expr a, double c) { return a + cst(a, c); }
Expr operator+(double c, Expr a) { return cst(a, c) + a; }
Expr operator-(Expr a, double c) { return a - cst(a, c); }
Expr operator-(double c, Expr a) { return cst(a, c) - a; }
Expr operator*(Expr a, double c) { return a * cst(a, c); }
Expr operator*(double c, Expr a) { return cst(a, c) * a; }
Expr operator/(Expr a, double c) { return a / cst(a, c); }
Expr operator/(double c, Expr a) { return cst(a, c) / a; }
Expr pow_c(Expr a, double p) { return un(Op::PowC, a, p); }
Expr exp(Expr a) { return un(Op::Exp, a); }
Expr log(Expr a) { return un(Op::Log, a); }
Expr sin(Expr a) { return un(Op::Sin, a); }
Expr cos(Expr a) { return un(Op::Cos, a); }
Expr tanh(Expr a) { return un(Op::Tanh, a); }
Expr sigmoid(Expr a) { return un(Op::Sigmoid, a); }
Expr abs(Expr a) { return un(Op::Abs, a); }
Expr huber(Expr a, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber delta must be positive");
  return un(Op::Huber, a, delta);
}
Expr min(Expr a, Expr b) { return bin(Op::Min, a, b); }
Expr max(Expr a, Expr b) { return bin(Op::Max, a, b); }
Expr square(Expr a) { return a * a; }

Recording record(std::span<const double> leaf_values,
                 const std::function<Expr(Graph&, std::span<const std::int32_t>)>& build) {
  Recording rec;
  rec.leaves.reserve(leaf_values.size());
  for (double v : leaf_values) rec.leaves.push_back(rec.graph.leaf(v));
  Expr out = build(rec.graph, rec.leaves);
  if (out.g != &rec.graph || out.id < 0) throw std::invalid_argument("builder returned foreign expression");
  rec.output = out.id;
  return rec;
}

BlockEval::BlockEval(const Graph& g) : g_(&g) {
  val_.assign(static_cast<std::size_t>(g.size()) * kLanes, 0.0);
  adj_.assign(static_cast<std::size_t>(g.size()) * kLanes, 0.0);
  for (std::int32_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    if (n.op == Op::Leaf || n.op == Op::Const)
      for (int l = 0; l < kLanes; ++l) val_[static_cast<std::size_t>(i) * kLanes + l] = n.val;
  }
}

void BlockEval::broadcast(std::int32_t lf, double v) {
  double* p = &val_[static_cast<std::size_t>(lf) * kLanes];
  for (int l = 0; l < kLanes; ++l) p[l] = v;
}

void BlockEval::set(std::int32_t lf, int lane, double v) {
  val_[static_cast<std::size_t>(lf) * kLanes + lane] = v;
}

void BlockEval::forward(std::int32_t upto) {
  const auto& nodes = g_->nodes();
  double* base = val_.data();
  for (std::int32_t i = 0; i <= upto; ++i) {
    const Node& n = nodes[i];
    if (n.op == Op::Leaf || n.op == Op::Const) continue;
    double* __restrict out = base + static_cast<std::size_t>(i) * kLanes;
    const double* __restrict a = base + static_cast<std::size_t>(n.a) * kLanes;
    const double* __restrict b = n.b >= 0 ? base + static_cast<std::size_t>(n.b) * kLanes : nullptr;
    switch (n.op) {
      case Op::Add:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] + b[l];
        break;
      case Op::Sub:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] - b[l];
        break;
      case Op::Mul:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] * b[l];
        break;
      case Op::Div:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] / b[l];
        break;
      case Op::Neg:
        for (int l = 0; l < kLanes; ++l) out[l] = -a[l];
        break;
      case Op::PowC:
        for (int l = 0; l < kLanes; ++l) out[l] = std::pow(a[l], n.aux);
        break;
      case Op::Exp:
        for (int l = 0; l < kLanes; ++l) out[l] = std::exp(a[l]);
        break;
      case Op::Log:
        for (int l = 0; l < kLanes; ++l) out[l] = std::log(a[l]);
        break;
      case Op::Sin:
        for (int l = 0; l < kLanes; ++l) out[l] = std::sin(a[l]);
        break;
      case Op::Cos:
        for (int l = 0; l < kLanes; ++l) out[l] = std::cos(a[l]);
        break;
      case Op::Tanh:
        for (int l = 0; l < kLanes; ++l) out[l] = std::tanh(a[l]);
        break;
      case Op::Sigmoid:
        for (int l = 0; l < kLanes; ++l) out[l] = 1.0 / (1.0 + std::exp(-a[l]));
        break;
      case Op::Abs:
        for (int l = 0; l < kLanes; ++l) out[l] = std::fabs(a[l]);
        break;
      case Op::Sign:
        for (int l = 0; l < kLanes; ++l) out[l] = sign_val(a[l]);
        break;
      case Op::Huber:
        for (int l = 0; l < kLanes; ++l) out[l] = huber_val(a[l], n.aux);
        break;
      case Op::Min:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] <= b[l] ? a[l] : b[l];
        break;
      case Op::Max:
        for (int l = 0; l < kLanes; ++l) out[l] = a[l] >= b[l] ? a[l] : b[l];
        break;
      default:
        break;
    }
  }
}

void BlockEval::backward(std::int32_t out) {
  const auto& nodes = g_->nodes();
  std::fill(adj_.begin(), adj_.begin() + (static_cast<std::size_t>(out) + 1) * kLanes, 0.0);
  double* base = adj_.data();
  const double* vals = val_.data();
  for (int l = 0; l < kLanes; ++l) base[static_cast<std::size_t>(out) * kLanes + l] = 1.0;
  for (std::int32_t i = out; i >= 0; --i) {
    const Node& n = nodes[i];
    if (n.op == Op::Leaf || n.op == Op::Const) continue;
    const double* __restrict w = base + static_cast<std::size_t>(i) * kLanes;
    double* __restrict aa = base + static_cast<std::size_t>(n.a) * kLanes;
    double* __restrict ab = n.b >= 0 ? base + static_cast<std::size_t>(n.b) * kLanes : nullptr;
    const double* __restrict av = vals + static_cast<std::size_t>(n.a) * kLanes;
    const double* __restrict bv = n.b >= 0 ? vals + static_cast<std::size_t>(n.b) * kLanes : nullptr;
    const double* __restrict v = vals + static_cast<std::size_t>(i) * kLanes;
    switch (n.op) {
      case Op::Add:
        for (int l = 0; l < kLanes; ++l) {
          aa[l] += w[l];
          ab[l] += w[l];
        }
        break;
      case Op::Sub:
        for (int l = 0; l < kLanes; ++l) {
          aa[l] += w[l];
          ab[l] -= w[l];
        }
        break;
      case Op::Mul:
        for (int l = 0; l < kLanes; ++l) {
          aa[l] += w[l] * bv[l];
          ab[l] += w[l] * av[l];
        }
        break;
      case Op::Div:
        for (int l = 0; l < kLanes; ++l) {
          aa[l] += w[l] / bv[l];
          ab[l] -= w[l] * v[l] / bv[l];
        }
        break;
      case Op::Neg:
        for (int l = 0; l < kLanes; ++l) aa[l] -= w[l];
        break;
      case Op::PowC:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * n.aux * std::pow(av[l], n.aux - 1.0);
        break;
      case Op::Exp:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * v[l];
        break;
      case Op::Log:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] / av[l];
        break;
      case Op::Sin:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * std::cos(av[l]);
        break;
      case Op::Cos:
        for (int l = 0; l < kLanes; ++l) aa[l] -= w[l] * std::sin(av[l]);
        break;
      case Op::Tanh:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * (1.0 - v[l] * v[l]);
        break;
      case Op::Sigmoid:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * v[l] * (1.0 - v[l]);
        break;
      case Op::Abs:
        for (int l = 0; l < kLanes; ++l) aa[l] += w[l] * sign_val(av[l]);
        break;
      case Op::Sign:
        break;
      case Op::Huber:
        for (int l = 0; l < kLanes; ++l)
          aa[l] += w[l] * std::fmin(std::fmax(av[l], -n.aux), n.aux);
        break;
      case Op::Min:
        for (int l = 0; l < kLanes; ++l) (av[l] <= bv[l] ? aa : ab)[l] += w[l];
        break;
      case Op::Max:
        for (int l = 0; l < kLanes; ++l) (av[l] >= bv[l] ? aa : ab)[l] += w[l];
        break;
      default:
        break;
    }
  }
}

}  // namespace pdelearn
