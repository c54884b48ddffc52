#include "funcgrasp/autodiff.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace funcgrasp::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("autodiff: ") + what);
}

void require_same_tape(Var a, Var b) { require(a.tape == b.tape && a.tape != nullptr, "vars on different tapes"); }

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) { return record(std::move(value), nullptr); }

Var Tape::parameter(const Matrix& value, Matrix* grad) {
  return record(value, [grad](Tape& t, int self) { *grad += t.grad(self); });
}

Var Tape::record(Matrix value, std::function<void(Tape&, int)> backward) {
  nodes_.push_back({std::move(value), Matrix(), std::move(backward)});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  require(out.tape == this, "backward on a foreign var");
  require(value(out.id).size() == 1, "backward needs a scalar output");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  grad(out.id)(0, 0) = 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require(a.cols() == b.rows(), "matmul shape mismatch");
  return a.tape->record(a.value() * b.value(), [a, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(a.id) += g * b.value().transpose();
    t.grad(b.id) += a.value().transpose() * g;
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  return a.tape->record(a.value() + b.value(), [a, b](Tape& t, int self) {
    t.grad(a.id) += t.grad(self);
    t.grad(b.id) += t.grad(self);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
  return a.tape->record(a.value() - b.value(), [a, b](Tape& t, int self) {
    t.grad(a.id) += t.grad(self);
    t.grad(b.id) -= t.grad(self);
  });
}

Var add_row(Var a, Var r) {
  require_same_tape(a, r);
  require(r.rows() == 1 && r.cols() == a.cols(), "add_row shape mismatch");
  Matrix v = a.value();
  v.rowwise() += r.value().row(0);
  return a.tape->record(std::move(v), [a, r](Tape& t, int self) {
    t.grad(a.id) += t.grad(self);
    t.grad(r.id) += t.grad(self).colwise().sum();
  });
}

Var affine(Var x, Var w, Var b) {
  require_same_tape(x, w);
  require_same_tape(x, b);
  require(x.cols() == w.rows(), "affine shape mismatch");
  require(b.rows() == 1 && b.cols() == w.cols(), "affine bias shape mismatch");
  Matrix v = x.value() * w.value();
  v.rowwise() += b.value().row(0);
  return x.tape->record(std::move(v), [x, w, b](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(x.id) += g * w.value().transpose();
    t.grad(w.id) += x.value().transpose() * g;
    t.grad(b.id) += g.colwise().sum();
  });
}

Var relu(Var a) {
  return a.tape->record(a.value().cwiseMax(0.0), [a](Tape& t, int self) {
    t.grad(a.id) += (a.value().array() > 0.0).select(t.grad(self), 0.0);
  });
}

Var sigmoid(Var a) {
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(v), [a](Tape& t, int self) {
    const auto s = t.value(self).array();
    t.grad(a.id) += (t.grad(self).array() * s * (1.0 - s)).matrix();
  });
}

Var exp(Var a) {
  return a.tape->record(a.value().array().exp().matrix(), [a](Tape& t, int self) {
    t.grad(a.id) += t.grad(self).cwiseProduct(t.value(self));
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul shape mismatch");
  return a.tape->record(a.value().cwiseProduct(b.value()), [a, b](Tape& t, int self) {
    t.grad(a.id) += t.grad(self).cwiseProduct(b.value());
    t.grad(b.id) += t.grad(self).cwiseProduct(a.value());
  });
}

Var scale(Var a, double s) {
  return a.tape->record(s * a.value(), [a, s](Tape& t, int self) { t.grad(a.id) += s * t.grad(self); });
}

Var sum(Var a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape->record(std::move(v), [a](Tape& t, int self) {
    t.grad(a.id).array() += t.grad(self)(0, 0);
  });
}

Var square(Var a) {
  return a.tape->record(a.value().cwiseAbs2(), [a](Tape& t, int self) {
    t.grad(a.id) += 2.0 * t.grad(self).cwiseProduct(a.value());
  });
}

Var max_rows(Var a) {
  require(a.rows() > 0, "max_rows of an empty matrix");
  const Matrix& v = a.value();
  Matrix out(1, v.cols());
  std::vector<Eigen::Index> arg(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < v.rows(); ++r) {
      if (v(r, c) > v(best, c)) best = r;
    }
    arg[c] = best;
    out(0, c) = v(best, c);
  }
  return a.tape->record(std::move(out), [a, arg](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t c = 0; c < arg.size(); ++c) ga(arg[c], c) += g(0, c);
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows(), "concat_cols row mismatch");
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Eigen::Index ca = a.cols();
  return a.tape->record(std::move(v), [a, b, ca](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(a.id) += g.leftCols(ca);
    t.grad(b.id) += g.rightCols(g.cols() - ca);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  return a.tape->record(a.value().middleCols(start, count), [a, start, count](Tape& t, int self) {
    t.grad(a.id).middleCols(start, count) += t.grad(self);
  });
}

Var repeat_rows(Var r, Eigen::Index n) {
  require(r.rows() == 1, "repeat_rows needs a row vector");
  return r.tape->record(r.value().replicate(n, 1), [r](Tape& t, int self) {
    t.grad(r.id) += t.grad(self).colwise().sum();
  });
}

Var gram_schmidt(Var a) {
  require(a.rows() == 1 && a.cols() == 6, "gram_schmidt needs a 1x6 row");
  const Eigen::Vector3d a1 = a.value().block<1, 3>(0, 0).transpose();
  const Eigen::Vector3d a2 = a.value().block<1, 3>(0, 3).transpose();
  const double n1 = a1.norm();
  require(n1 > 1e-12, "gram_schmidt: first vector is zero");
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d u = a2 - b1.dot(a2) * b1;
  const double nu = u.norm();
  require(nu > 1e-12, "gram_schmidt: vectors are parallel");
  const Eigen::Vector3d b2 = u / nu;
  const Eigen::Vector3d b3 = b1.cross(b2);
  Matrix r(3, 3);
  r << b1, b2, b3;
  return a.tape->record(std::move(r), [a, a2, n1, nu, b1, b2](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Vector3d gb1 = g.col(0);
    Eigen::Vector3d gb2 = g.col(1);
    const Eigen::Vector3d gb3 = g.col(2);
    gb1 += b2.cross(gb3);
    gb2 += gb3.cross(b1);
    const Eigen::Vector3d gu = (gb2 - b2.dot(gb2) * b2) / nu;
    const Eigen::Vector3d ga2 = gu - b1.dot(gu) * b1;
    gb1 -= b1.dot(a2) * gu + b1.dot(gu) * a2;
    const Eigen::Vector3d ga1 = (gb1 - b1.dot(gb1) * b1) / n1;
    Matrix& ga = t.grad(a.id);
    ga.block<1, 3>(0, 0) += ga1.transpose();
    ga.block<1, 3>(0, 3) += ga2.transpose();
  });
}

}  // namespace funcgrasp::ad
