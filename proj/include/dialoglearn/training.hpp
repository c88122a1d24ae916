#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dialoglearn/checkpoint.hpp"
#include "dialoglearn/taskgen.hpp"

namespace dialoglearn {

enum class Strategy { imitation, rbi, fp, rbi_fp };

Strategy strategy_from_name(const std::string& name);
const char* strategy_name(Strategy s);

// Whether answers that received no feedback at all (expert-style data) count
// as positively rewarded for reward-based imitation. auto_detect turns this
// on only when the whole training set is feedback-free.
enum class ExpertReward { auto_detect, on, off };

struct Hyperparams {
  int dim = 32;
  int hops = 2;
  int batch = 32;
  int epochs_max = 200;
  int patience = 25;      // epochs without validation improvement before stopping
  int k_negatives = 16;   // responses scored per forward-prediction step
  int max_memories = 50;
  double lr = 0.1;
  double grad_clip = 1.0;  // max gradient norm per update
  double init_sigma = 0.1;
  std::uint64_t seed = 1;
  ExpertReward expert_reward = ExpertReward::auto_detect;

  void validate() const;
};

// One question exchange, flattened for training. The context holds the
// story and question turns that came strictly before the question; the
// learner's answer, its reward and the teacher's reaction never enter the
// context. The gold annotation is carried for evaluation only.
struct TrainingExample {
  std::string x;                     // the question utterance
  std::vector<std::string> context;  // prior story/question turns, oldest first
  std::string answer;                // the answer given in the dialog
  int reward = 0;
  std::string response;  // teacher turns of the exchange, joined with spaces
  std::optional<std::string> gold;
};

std::vector<TrainingExample> extract_examples(const Dataset& data);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_acc = 0.0;  // percent
};

struct TrainOutput {
  TrainedModel model;  // checkpoint of the best validation epoch
  std::vector<EpochRecord> log;
  double best_valid_acc = 0.0;
  int best_epoch = 0;
  std::string warning;
};

// Trains one strategy over the dataset with validation-based model selection.
//  imitation  every answer is a cross-entropy target
//  rbi        imitation restricted to rewarded answers; an empty rewarded
//             subset returns the initialized model with a warning
//  fp         predicts the teacher's response among sampled candidates;
//             errors when the data carries no responses at all
//  rbi_fp     shared weights, per batch one fp step then one rbi step
TrainOutput train(Strategy strategy, const Dataset& train_data, const Dataset& valid_data,
                  const Hyperparams& hyper);

// Percentage of questions whose predicted answer equals the gold annotation.
// Reads only the question, the story context and the gold label; the
// recorded answers, feedback and rewards cannot influence the result.
double evaluate(const TrainedModel& model, const Dataset& data);

}  // namespace dialoglearn
