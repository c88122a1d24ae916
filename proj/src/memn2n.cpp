#include "dialoglearn/memn2n.hpp"

#include <algorithm>
#include <unordered_set>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

ModelParams::ModelParams(ModelConfig cfg, int vocab_size)
    : cfg_(cfg), vocab_size_(vocab_size) {
  if (cfg.d < 1) throw ConfigError("embedding dimension must be >= 1");
  if (cfg.hops < 1 || cfg.hops > 3) throw ConfigError("hops must be in 1..3");
  if (cfg.max_memories < 1) throw ConfigError("max_memories must be >= 1");
  if (vocab_size < 1) throw ConfigError("vocabulary must be non-empty");
  store_.add("A", cfg.d, vocab_size);
  for (int h = 1; h <= cfg.hops; ++h) store_.add("R" + std::to_string(h), cfg.d, cfg.d);
  store_.add("Rfp", cfg.d, cfg.d);
  store_.add("beta", cfg.d, 1);
  store_.add("time", cfg.d, cfg.max_memories);
}

void ModelParams::init(Rng& rng, double sigma) {
  store_.init_gaussian(rng, sigma);
  // The position signal starts an order of magnitude above the content
  // signal: an untrained model then predicts by position noise rather than
  // by word overlap, and training shrinks the slots it does not need.
  for (double& v : store_.value("time").data()) v *= 10.0;
  // Same for the selected-action marker, whose coefficient is the only
  // signal distinguishing the chosen answer in response prediction.
  for (double& v : store_.value("beta").data()) v *= 10.0;
  // Controller maps start as a perturbed identity so that early training
  // routes information through the shared embedding rather than through an
  // arbitrary rotation.
  for (const auto& name : store_.names()) {
    if (name[0] != 'R') continue;
    Matrix& m = store_.value(name);
    for (int r = 0; r < m.rows(); ++r) m(r, r) += 1.0;
  }
}

Matrix& ModelParams::hop_map(int hop) { return store_.value("R" + std::to_string(hop)); }
const Matrix& ModelParams::hop_map(int hop) const {
  return store_.value("R" + std::to_string(hop));
}

AnswerSet AnswerSet::build(std::vector<std::string> items, const Vocabulary& vocab) {
  std::unordered_set<std::string> seen;
  for (const auto& s : items)
    if (!seen.insert(s).second) throw UsageError("duplicate entry '" + s + "'");
  AnswerSet set;
  set.display = std::move(items);
  set.bows.reserve(set.display.size());
  for (const auto& s : set.display) set.bows.push_back(encode_bow(s, vocab));
  return set;
}

int AnswerSet::find(const std::string& item) const {
  for (std::size_t i = 0; i < display.size(); ++i)
    if (display[i] == item) return static_cast<int>(i);
  return -1;
}

namespace {

Vec embed(const Matrix& a, const Bow& bow) {
  Vec out((std::size_t)a.rows(), 0.0);
  for (const auto& e : bow)
    for (int r = 0; r < a.rows(); ++r) out[(std::size_t)r] += e.count * a(r, e.index);
  return out;
}

void embed_backward(Matrix& ga, const Bow& bow, const Vec& dvec, double scale) {
  for (const auto& e : bow) {
    double s = scale * e.count;
    for (int r = 0; r < ga.rows(); ++r) ga(r, e.index) += s * dvec[(std::size_t)r];
  }
}

void check_context(const ModelParams& params, std::span<const Bow> context) {
  if (static_cast<int>(context.size()) > params.config().max_memories)
    throw DataError("context of " + std::to_string(context.size()) +
                    " turns exceeds the memory capacity of " +
                    std::to_string(params.config().max_memories));
}

// Embedded memory slots: shared embedding plus the slot's position vector,
// slot 0 being the most recent (last) context entry.
std::vector<Vec> embed_memories(const ModelParams& params, std::span<const Bow> context) {
  const Matrix& a = params.embedding();
  const Matrix& time = params.time_embedding();
  std::size_t n = context.size();
  std::vector<Vec> mem(n);
  for (std::size_t i = 0; i < n; ++i) {
    mem[i] = embed(a, context[i]);
    int slot = static_cast<int>(n - 1 - i);
    for (int r = 0; r < a.rows(); ++r) mem[i][(std::size_t)r] += time(r, slot);
  }
  return mem;
}

}  // namespace

AnswerForward forward_answer(const ModelParams& params, const Bow& input,
                             std::span<const Bow> context, const CandidateSet& candidates) {
  if (candidates.size() == 0) throw UsageError("candidate set is empty");
  check_context(params, context);

  AnswerForward fwd;
  fwd.trace.q = embed(params.embedding(), input);
  fwd.memory = embed_memories(params, context);
  std::size_t n = fwd.memory.size();
  int hops = params.config().hops;

  const Vec* u_prev = &fwd.trace.q;
  for (int h = 1; h <= hops; ++h) {
    Vec p, o((std::size_t)params.config().d, 0.0);
    if (n > 0) {
      Vec scores(n);
      for (std::size_t i = 0; i < n; ++i) scores[i] = dot(*u_prev, fwd.memory[i]);
      p = softmax(scores);
      for (std::size_t i = 0; i < n; ++i) axpy(p[i], fwd.memory[i], o);
    }
    Vec v = o;
    for (std::size_t r = 0; r < v.size(); ++r) v[r] += (*u_prev)[r];
    fwd.trace.p.push_back(std::move(p));
    fwd.trace.o.push_back(std::move(o));
    fwd.trace.u.push_back(matvec(params.hop_map(h), v));
    u_prev = &fwd.trace.u.back();
  }

  fwd.cand.reserve((std::size_t)candidates.size());
  Vec scores((std::size_t)candidates.size());
  for (int j = 0; j < candidates.size(); ++j) {
    fwd.cand.push_back(embed(params.embedding(), candidates.bows[(std::size_t)j]));
    scores[(std::size_t)j] = dot(*u_prev, fwd.cand.back());
  }
  fwd.dist = softmax(scores);
  return fwd;
}

namespace {

// Backpropagates from a gradient on the final controller state down through
// the hops, the memories, the time embedding and the shared embedding.
void backward_base(ModelParams& params, const AnswerForward& fwd, const Bow& input,
                   std::span<const Bow> context, Vec du, double scale) {
  const int hops = params.config().hops;
  const std::size_t n = fwd.memory.size();
  std::vector<Vec> dmem(n, Vec((std::size_t)params.config().d, 0.0));

  for (int h = hops; h >= 1; --h) {
    const Vec& u_in = h == 1 ? fwd.trace.q : fwd.trace.u[(std::size_t)h - 2];
    const Vec& o = fwd.trace.o[(std::size_t)h - 1];
    Vec v = o;
    for (std::size_t r = 0; r < v.size(); ++r) v[r] += u_in[r];

    // u_h = R_h v, v = o_h + u_{h-1}
    add_outer(params.store().grad("R" + std::to_string(h)), du, v, scale);
    Vec dv = matvec_t(params.hop_map(h), du);
    Vec du_in = dv;  // via v
    if (n > 0) {
      const Vec& p = fwd.trace.p[(std::size_t)h - 1];
      // o_h = sum_i p_i m_i
      Vec dp(n);
      for (std::size_t i = 0; i < n; ++i) {
        dp[i] = dot(dv, fwd.memory[i]);
        axpy(p[i], dv, dmem[i]);
      }
      // softmax over z_i = u_{h-1} . m_i
      double pdp = dot(p, dp);
      for (std::size_t i = 0; i < n; ++i) {
        double dz = p[i] * (dp[i] - pdp);
        axpy(dz, fwd.memory[i], du_in);
        axpy(dz, u_in, dmem[i]);
      }
    }
    du = std::move(du_in);
  }

  // m_i = A c_i + time[:, slot]
  Matrix& gtime = params.store().grad("time");
  Matrix& ga = params.store().grad("A");
  for (std::size_t i = 0; i < n; ++i) {
    int slot = static_cast<int>(n - 1 - i);
    for (int r = 0; r < gtime.rows(); ++r) gtime(r, slot) += scale * dmem[i][(std::size_t)r];
    embed_backward(ga, context[i], dmem[i], scale);
  }
  // q = A x
  embed_backward(ga, input, du, scale);
}

void check_selected(const CandidateSet& candidates, int selected) {
  if (selected < 0 || selected >= candidates.size())
    throw UsageError("selected action is not among the candidates");
}

std::vector<int> full_subset(const ResponseSet& responses) {
  std::vector<int> all((std::size_t)responses.size());
  for (int i = 0; i < responses.size(); ++i) all[(std::size_t)i] = i;
  return all;
}

}  // namespace

FpForward forward_predict(const ModelParams& params, const Bow& input,
                          std::span<const Bow> context, const CandidateSet& candidates,
                          int selected, const ResponseSet& responses,
                          std::span<const int> subset) {
  check_selected(candidates, selected);
  if (responses.size() == 0) throw UsageError("response set is empty");

  FpForward fwd;
  fwd.base = forward_answer(params, input, context, candidates);
  const Vec& u_last = fwd.base.trace.u.back();
  const int d = params.config().d;

  // Attention over the candidate answers with the chosen one marked.
  Vec scores((std::size_t)candidates.size());
  for (int i = 0; i < candidates.size(); ++i)
    scores[(std::size_t)i] = dot(u_last, fwd.base.cand[(std::size_t)i]);
  fwd.fp.p3 = softmax(scores);
  fwd.fp.o3.assign((std::size_t)d, 0.0);
  for (int i = 0; i < candidates.size(); ++i)
    axpy(fwd.fp.p3[(std::size_t)i], fwd.base.cand[(std::size_t)i], fwd.fp.o3);
  const Matrix& beta = params.action_marker();
  for (int r = 0; r < d; ++r)
    fwd.fp.o3[(std::size_t)r] += fwd.fp.p3[(std::size_t)selected] * beta(r, 0);

  Vec v3 = fwd.fp.o3;
  for (std::size_t r = 0; r < v3.size(); ++r) v3[r] += u_last[r];
  fwd.fp.u3 = matvec(params.fp_map(), v3);

  fwd.subset = subset.empty() ? full_subset(responses)
                              : std::vector<int>(subset.begin(), subset.end());
  Vec rscores(fwd.subset.size());
  fwd.resp.reserve(fwd.subset.size());
  for (std::size_t j = 0; j < fwd.subset.size(); ++j) {
    int idx = fwd.subset[j];
    if (idx < 0 || idx >= responses.size())
      throw UsageError("response subset index out of range");
    fwd.resp.push_back(embed(params.embedding(), responses.bows[(std::size_t)idx]));
    rscores[j] = dot(fwd.fp.u3, fwd.resp.back());
  }
  fwd.dist = softmax(rscores);
  return fwd;
}

int predict(const ModelParams& params, const Bow& input, std::span<const Bow> context,
            const CandidateSet& candidates) {
  AnswerForward fwd = forward_answer(params, input, context, candidates);
  int best = 0;
  for (std::size_t j = 1; j < fwd.dist.size(); ++j)
    if (fwd.dist[j] > fwd.dist[(std::size_t)best]) best = static_cast<int>(j);
  return best;
}

std::vector<int> subsample_negatives(const ResponseSet& responses, int true_index,
                                     int k, Rng& rng) {
  if (k < 1) throw UsageError("negative sample count must be >= 1");
  if (true_index < 0 || true_index >= responses.size())
    throw UsageError("true response is not in the response set");
  std::vector<int> out{true_index};
  if (k >= responses.size()) {
    for (int i = 0; i < responses.size(); ++i)
      if (i != true_index) out.push_back(i);
    return out;
  }
  std::vector<int> others;
  others.reserve((std::size_t)responses.size() - 1);
  for (int i = 0; i < responses.size(); ++i)
    if (i != true_index) others.push_back(i);
  for (int j = 0; j < k - 1; ++j) {
    int pick = rng.uniform_int(j, static_cast<int>(others.size()) - 1);
    std::swap(others[(std::size_t)j], others[(std::size_t)pick]);
    out.push_back(others[(std::size_t)j]);
  }
  return out;
}

double answer_loss(const ModelParams& params, const Bow& input,
                   std::span<const Bow> context, const CandidateSet& candidates,
                   int target) {
  AnswerForward fwd = forward_answer(params, input, context, candidates);
  return cross_entropy(fwd.dist, target).loss;
}

double answer_loss_grad(ModelParams& params, const Bow& input,
                        std::span<const Bow> context, const CandidateSet& candidates,
                        int target, double scale) {
  AnswerForward fwd = forward_answer(params, input, context, candidates);
  CrossEntropyResult ce = cross_entropy(fwd.dist, target);

  const Vec& u_last = fwd.trace.u.back();
  Vec du((std::size_t)params.config().d, 0.0);
  Matrix& ga = params.store().grad("A");
  for (int j = 0; j < candidates.size(); ++j) {
    double ds = ce.dscores[(std::size_t)j];
    axpy(ds, fwd.cand[(std::size_t)j], du);
    embed_backward(ga, candidates.bows[(std::size_t)j], u_last, scale * ds);
  }
  backward_base(params, fwd, input, context, std::move(du), scale);
  return ce.loss;
}

double fp_loss(const ModelParams& params, const Bow& input, std::span<const Bow> context,
               const CandidateSet& candidates, int selected, const ResponseSet& responses,
               std::span<const int> subset, int target_pos) {
  FpForward fwd =
      forward_predict(params, input, context, candidates, selected, responses, subset);
  return cross_entropy(fwd.dist, target_pos).loss;
}

double fp_loss_grad(ModelParams& params, const Bow& input, std::span<const Bow> context,
                    const CandidateSet& candidates, int selected,
                    const ResponseSet& responses, std::span<const int> subset,
                    int target_pos, double scale) {
  FpForward fwd =
      forward_predict(params, input, context, candidates, selected, responses, subset);
  CrossEntropyResult ce = cross_entropy(fwd.dist, target_pos);

  const int d = params.config().d;
  const Vec& u_last = fwd.base.trace.u.back();
  Matrix& ga = params.store().grad("A");

  // Response scores: sbar_j = u3 . A xbar_j
  Vec du3((std::size_t)d, 0.0);
  for (std::size_t j = 0; j < fwd.subset.size(); ++j) {
    double ds = ce.dscores[j];
    axpy(ds, fwd.resp[j], du3);
    embed_backward(ga, responses.bows[(std::size_t)fwd.subset[j]], fwd.fp.u3, scale * ds);
  }

  // u3 = Rfp (o3 + u_last)
  Vec v3 = fwd.fp.o3;
  for (std::size_t r = 0; r < v3.size(); ++r) v3[r] += u_last[r];
  add_outer(params.store().grad("Rfp"), du3, v3, scale);
  Vec dv3 = matvec_t(params.fp_map(), du3);

  // o3 = sum_i p3_i (A y_i) + p3_sel beta
  const Matrix& beta = params.action_marker();
  Matrix& gbeta = params.store().grad("beta");
  const Vec& p3 = fwd.fp.p3;
  for (int r = 0; r < d; ++r)
    gbeta(r, 0) += scale * p3[(std::size_t)selected] * dv3[(std::size_t)r];

  std::size_t nc = (std::size_t)candidates.size();
  std::vector<Vec> dcand(nc, Vec((std::size_t)d, 0.0));
  Vec dp3(nc);
  double beta_dot = 0.0;
  for (int r = 0; r < d; ++r) beta_dot += dv3[(std::size_t)r] * beta(r, 0);
  for (std::size_t i = 0; i < nc; ++i) {
    dp3[i] = dot(dv3, fwd.base.cand[i]);
    if (static_cast<int>(i) == selected) dp3[i] += beta_dot;
    axpy(p3[i], dv3, dcand[i]);
  }

  // softmax over z3_i = u_last . A y_i
  Vec du = dv3;  // gradient on u_last via v3
  double pdp = dot(p3, dp3);
  for (std::size_t i = 0; i < nc; ++i) {
    double dz = p3[i] * (dp3[i] - pdp);
    axpy(dz, fwd.base.cand[i], du);
    axpy(dz, u_last, dcand[i]);
  }
  for (std::size_t i = 0; i < nc; ++i)
    embed_backward(ga, candidates.bows[i], dcand[i], scale);

  backward_base(params, fwd.base, input, context, std::move(du), scale);
  return ce.loss;
}

}  // namespace dialoglearn
