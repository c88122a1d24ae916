#include "dialoglearn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_((std::size_t)rows * (std::size_t)cols, fill) {
  if (rows < 0 || cols < 0) throw UsageError("matrix dimensions must be non-negative");
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Vec softmax(const Vec& scores) {
  if (scores.empty()) throw UsageError("softmax of an empty score vector");
  double mx = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

CrossEntropyResult cross_entropy(const Vec& prob, int target) {
  if (target < 0 || target >= static_cast<int>(prob.size()))
    throw UsageError("cross_entropy target out of range");
  CrossEntropyResult r;
  double p = prob[(std::size_t)target];
  if (p < 1e-12) {
    p = 1e-12;
    r.clamped = true;
  }
  r.loss = -std::log(p);
  r.dscores = prob;
  r.dscores[(std::size_t)target] -= 1.0;
  return r;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec matvec(const Matrix& m, const Vec& v) {
  Vec out((std::size_t)m.rows(), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < m.cols(); ++c) s += m(r, c) * v[(std::size_t)c];
    out[(std::size_t)r] = s;
  }
  return out;
}

Vec matvec_t(const Matrix& m, const Vec& v) {
  Vec out((std::size_t)m.cols(), 0.0);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[(std::size_t)c] += m(r, c) * v[(std::size_t)r];
  return out;
}

void add_outer(Matrix& m, const Vec& u, const Vec& v, double s) {
  for (int r = 0; r < m.rows(); ++r) {
    double su = s * u[(std::size_t)r];
    for (int c = 0; c < m.cols(); ++c) m(r, c) += su * v[(std::size_t)c];
  }
}

Matrix& ParamStore::add(const std::string& name, int rows, int cols) {
  if (has(name)) throw UsageError("parameter '" + name + "' already exists");
  entries_.push_back(Entry{name, Matrix(rows, cols), Matrix(rows, cols)});
  names_.push_back(name);
  return entries_.back().value;
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

namespace {
[[noreturn]] void unknown_param(const std::string& name) {
  throw UsageError("unknown parameter '" + name + "'");
}
}  // namespace

Matrix& ParamStore::value(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return e.value;
  unknown_param(name);
}

const Matrix& ParamStore::value(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.value;
  unknown_param(name);
}

Matrix& ParamStore::grad(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return e.grad;
  unknown_param(name);
}

const Matrix& ParamStore::grad(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.grad;
  unknown_param(name);
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

double ParamStore::clip_grad_norm(double max_norm) {
  double sq = 0.0;
  for (const auto& e : entries_)
    for (double v : e.grad.data()) sq += v * v;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (auto& e : entries_)
      for (double& v : e.grad.data()) v *= s;
  }
  return norm;
}

void ParamStore::sgd_step(double lr) {
  for (auto& e : entries_) {
    if (!e.grad.all_finite())
      throw TrainError("non-finite gradient for parameter '" + e.name + "'");
    auto& p = e.value.data();
    auto& g = e.grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    e.grad.fill(0.0);
  }
}

void ParamStore::init_gaussian(Rng& rng, double sigma) {
  for (auto& e : entries_)
    for (double& v : e.value.data()) v = rng.gaussian(0.0, sigma);
}

std::size_t ParamStore::coord_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.data().size();
  return n;
}

const ParamStore::Entry& ParamStore::entry_at_coord(std::size_t i, std::size_t& offset) const {
  for (const auto& e : entries_) {
    if (i < e.value.data().size()) {
      offset = i;
      return e;
    }
    i -= e.value.data().size();
  }
  throw UsageError("parameter coordinate out of range");
}

ParamStore::Entry& ParamStore::entry_at_coord(std::size_t i, std::size_t& offset) {
  const auto& self = *this;
  return const_cast<Entry&>(self.entry_at_coord(i, offset));
}

double ParamStore::get_coord(std::size_t i) const {
  std::size_t off;
  return entry_at_coord(i, off).value.data()[off];
}

void ParamStore::set_coord(std::size_t i, double v) {
  std::size_t off;
  entry_at_coord(i, off).value.data()[off] = v;
}

double ParamStore::grad_coord(std::size_t i) const {
  std::size_t off;
  return entry_at_coord(i, off).grad.data()[off];
}

std::string ParamStore::coord_param(std::size_t i) const {
  std::size_t off;
  return entry_at_coord(i, off).name;
}

GradcheckReport gradcheck(ParamStore& params, const std::function<double()>& loss_fn,
                          const std::function<void()>& grad_fn, double eps,
                          std::size_t sample_coords, Rng& rng) {
  if (eps <= 0.0 || eps > 1e-3) throw UsageError("gradcheck eps must be in (0, 1e-3]");
  grad_fn();
  std::size_t n = params.coord_count();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (n > sample_coords) {
    rng.shuffle(coords);
    coords.resize(sample_coords);
  }
  GradcheckReport rep;
  rep.coords_checked = coords.size();
  for (std::size_t i : coords) {
    double v = params.get_coord(i);
    params.set_coord(i, v + eps);
    double f1 = loss_fn();
    params.set_coord(i, v - eps);
    double f2 = loss_fn();
    params.set_coord(i, v);
    double numeric = (f1 - f2) / (2.0 * eps);
    double analytic = params.grad_coord(i);
    double denom = std::max({1e-2, std::abs(numeric), std::abs(analytic)});
    double rel = std::abs(numeric - analytic) / denom;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_param = params.coord_param(i);
      rep.analytic_at_worst = analytic;
      rep.numeric_at_worst = numeric;
    }
  }
  return rep;
}

}  // namespace dialoglearn
