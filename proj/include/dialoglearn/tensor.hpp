#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dialoglearn/rng.hpp"

namespace dialoglearn {

// Dense row-major matrix of 64-bit reals. All training-path math runs at
// double precision.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[(std::size_t)r * (std::size_t)cols_ + (std::size_t)c]; }
  double operator()(int r, int c) const { return data_[(std::size_t)r * (std::size_t)cols_ + (std::size_t)c]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

using Vec = std::vector<double>;

// Numerically stable softmax (max subtraction). Empty input is a usage error.
Vec softmax(const Vec& scores);

struct CrossEntropyResult {
  double loss = 0.0;
  Vec dscores;        // gradient w.r.t. the pre-softmax scores: prob - onehot
  bool clamped = false;  // probability at the target hit the 1e-12 floor
};

// Loss of a probability vector against a target index, with the fused
// score-space gradient for softmax inputs.
CrossEntropyResult cross_entropy(const Vec& prob, int target);

double dot(const Vec& a, const Vec& b);
void axpy(double a, const Vec& x, Vec& y);        // y += a*x
Vec matvec(const Matrix& m, const Vec& v);        // m * v
Vec matvec_t(const Matrix& m, const Vec& v);      // m^T * v
void add_outer(Matrix& m, const Vec& u, const Vec& v, double s);  // m += s * u v^T

// Named parameters with matching gradient accumulators. Iteration order is
// insertion order, which makes initialization and updates reproducible.
class ParamStore {
 public:
  Matrix& add(const std::string& name, int rows, int cols);
  bool has(const std::string& name) const;
  Matrix& value(const std::string& name);
  const Matrix& value(const std::string& name) const;
  Matrix& grad(const std::string& name);
  const Matrix& grad(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  void zero_grads();
  // Scales all gradients down so their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  // p <- p - lr * grad for every parameter, then zero the gradients.
  // Non-finite gradients abort with the parameter's name.
  void sgd_step(double lr);
  void init_gaussian(Rng& rng, double sigma);

  // Flat coordinate addressing across all parameters, used by gradcheck.
  std::size_t coord_count() const;
  double get_coord(std::size_t i) const;
  void set_coord(std::size_t i, double v);
  double grad_coord(std::size_t i) const;
  std::string coord_param(std::size_t i) const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  const Entry& entry_at_coord(std::size_t i, std::size_t& offset) const;
  Entry& entry_at_coord(std::size_t i, std::size_t& offset);
  std::vector<Entry> entries_;
  std::vector<std::string> names_;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Compares the analytic gradient produced by grad_fn against central finite
// differences of loss_fn on a random sample of coordinates. loss_fn must be a
// pure function of the current parameter values; grad_fn must zero and then
// populate the gradient accumulators.
GradcheckReport gradcheck(ParamStore& params, const std::function<double()>& loss_fn,
                          const std::function<void()>& grad_fn, double eps,
                          std::size_t sample_coords, Rng& rng);

}  // namespace dialoglearn
