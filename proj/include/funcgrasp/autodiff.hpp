#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace funcgrasp::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape over dense matrices. Nodes are recorded in evaluation
// order; backward() walks them in reverse and calls each node's adjoint.
class Tape {
 public:
  Var constant(Matrix value);
  // Leaf whose adjoint is added into *grad on backward(). `grad` must match
  // the value's shape and outlive the tape's backward pass.
  Var parameter(const Matrix& value, Matrix* grad);

  // Records a node. `backward` reads grad(self) and adds into its inputs.
  Var record(Matrix value, std::function<void(Tape&, int self)> backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  // Adjoint of a node; valid during backward().
  Matrix& grad(int id);

  // Seeds d out / d out = 1 (out must be 1x1) and propagates.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> backward;
  };
  std::vector<Node> nodes_;
};

// Dense ops. Shapes follow Eigen conventions; row vectors broadcast where
// noted.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// a (n x c) plus row vector r (1 x c) on every row.
Var add_row(Var a, Var r);
// x * w + b with b broadcast over rows.
Var affine(Var x, Var w, Var b);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var sum(Var a);  // 1x1
Var square(Var a);
// Column-wise max over rows: (n x c) -> (1 x c). Ties go to the first row.
Var max_rows(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
// Broadcasts a 1 x c row to n x c.
Var repeat_rows(Var r, Eigen::Index n);

// Two 3-vectors (1 x 6 row: a1 then a2) to a rotation matrix whose columns
// are the Gram-Schmidt orthonormalization of a1, a2 and their cross product.
Var gram_schmidt(Var a);

}  // namespace funcgrasp::ad
