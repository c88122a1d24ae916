#pragma once

#include <span>
#include <string>
#include <vector>

#include "dialoglearn/tensor.hpp"
#include "dialoglearn/vocab.hpp"

namespace dialoglearn {

struct ModelConfig {
  int d = 32;             // embedding dimension
  int hops = 2;           // attention hops over the memories, 1..3
  int max_memories = 50;  // memory slots; longer contexts are truncated upstream
};

// All learned tensors of the memory network, held in a ParamStore so the
// trainer and gradcheck can address them uniformly:
//   A     d x V   shared embedding for inputs, memories, candidates, responses
//   R1..  d x d   controller map per hop
//   Rfp   d x d   controller map of the response-prediction hop
//   beta  d x 1   marker added to the readout at the selected action
//   time  d x M   learned per-slot position embedding, slot 0 = most recent
class ModelParams {
 public:
  ModelParams(ModelConfig cfg, int vocab_size);

  const ModelConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  Matrix& embedding() { return store_.value("A"); }
  const Matrix& embedding() const { return store_.value("A"); }
  Matrix& hop_map(int hop);  // 1-based
  const Matrix& hop_map(int hop) const;
  Matrix& fp_map() { return store_.value("Rfp"); }
  const Matrix& fp_map() const { return store_.value("Rfp"); }
  Matrix& action_marker() { return store_.value("beta"); }
  const Matrix& action_marker() const { return store_.value("beta"); }
  Matrix& time_embedding() { return store_.value("time"); }
  const Matrix& time_embedding() const { return store_.value("time"); }

  void init(Rng& rng, double sigma = 0.1);

 private:
  ModelConfig cfg_;
  int vocab_size_ = 0;
  ParamStore store_;
};

// Answers or teacher responses with their display strings and bag-of-words
// encodings. Duplicates are rejected.
struct AnswerSet {
  std::vector<std::string> display;
  std::vector<Bow> bows;

  static AnswerSet build(std::vector<std::string> items, const Vocabulary& vocab);
  int find(const std::string& item) const;  // -1 when absent
  int size() const { return static_cast<int>(display.size()); }
};

using CandidateSet = AnswerSet;
using ResponseSet = AnswerSet;

struct AttentionTrace {
  Vec q;               // embedded input
  std::vector<Vec> p;  // attention over memories, per hop
  std::vector<Vec> o;  // weighted memory readout, per hop
  std::vector<Vec> u;  // controller state, per hop
};

struct AnswerForward {
  Vec dist;                 // probability over candidates
  AttentionTrace trace;
  std::vector<Vec> memory;  // embedded memory slots
  std::vector<Vec> cand;    // embedded candidates
};

// Embedded input attends over the embedded context for config.hops rounds,
// then scores the candidate answers against the final controller state.
// An empty context skips attention: the readouts are zero and the input
// flows through the controller maps alone.
AnswerForward forward_answer(const ModelParams& params, const Bow& input,
                             std::span<const Bow> context, const CandidateSet& candidates);

struct FpTrace {
  Vec p3;  // attention over the candidate answers
  Vec o3;  // candidate readout plus the selected-action marker
  Vec u3;  // controller state used to score responses
};

struct FpForward {
  Vec dist;                // probability over the scored responses
  FpTrace fp;
  AnswerForward base;      // shared computation up to the final hop state
  std::vector<Vec> resp;   // embedded responses, in subset order
  std::vector<int> subset; // response indices that were scored
};

// Response prediction: one more attention hop, over the candidate answers
// instead of the memories, with the selected action marked, then a softmax
// over the teacher responses. When subset is empty the full response set is
// scored.
FpForward forward_predict(const ModelParams& params, const Bow& input,
                          std::span<const Bow> context, const CandidateSet& candidates,
                          int selected, const ResponseSet& responses,
                          std::span<const int> subset = {});

// Argmax of forward_answer, ties broken by the lowest candidate index. Reads
// only the embedding, hop maps and time embedding; the response-prediction
// parameters cannot influence the result.
int predict(const ModelParams& params, const Bow& input, std::span<const Bow> context,
            const CandidateSet& candidates);

// min(k, size) distinct response indices, the true one always included and
// placed first.
std::vector<int> subsample_negatives(const ResponseSet& responses, int true_index,
                                     int k, Rng& rng);

// Cross-entropy of the answer distribution against the target candidate.
// The _grad variants also accumulate analytic gradients, scaled by `scale`.
double answer_loss(const ModelParams& params, const Bow& input,
                   std::span<const Bow> context, const CandidateSet& candidates,
                   int target);
double answer_loss_grad(ModelParams& params, const Bow& input,
                        std::span<const Bow> context, const CandidateSet& candidates,
                        int target, double scale);

double fp_loss(const ModelParams& params, const Bow& input, std::span<const Bow> context,
               const CandidateSet& candidates, int selected, const ResponseSet& responses,
               std::span<const int> subset, int target_pos);
double fp_loss_grad(ModelParams& params, const Bow& input, std::span<const Bow> context,
                    const CandidateSet& candidates, int selected,
                    const ResponseSet& responses, std::span<const int> subset,
                    int target_pos, double scale);

}  // namespace dialoglearn
