#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dialoglearn/rng.hpp"
#include "dialoglearn/world.hpp"

namespace dialoglearn {

// Fixed answering behavior used to generate learner answers. Optionally
// biased: some fraction of wrong answers is a fixed location instead of a
// uniform draw.
struct PolicyBias {
  double prob_fixed_wrong = 0.5;
  std::string fixed_answer;
  friend bool operator==(const PolicyBias&, const PolicyBias&) = default;
};

struct Policy {
  double pi_acc = 0.5;
  std::optional<PolicyBias> bias;
  void validate(const std::vector<std::string>& candidates) const;
};

// One of the ten supervision modes. reward_rate is the probability that a
// positive feedback turn carries the external reward flag.
struct SupervisionMode {
  int mode = 1;             // 1..10
  double reward_rate = 1.0; // 0.5 for mode 6, 0.0 for mode 7
  static SupervisionMode task(int mode);
};

enum class Speaker { teacher, learner };

enum class TurnKind { stmt, q, ans, fb, help, hint_fb, answer_fb, fact_fb };

bool is_feedback_kind(TurnKind k);
const char* kind_name(TurnKind k);
const char* speaker_name(Speaker s);

struct Turn {
  Speaker speaker = Speaker::teacher;
  TurnKind kind = TurnKind::stmt;
  std::string text;
  int reward = 0;                  // 1 only on teacher feedback turns
  std::optional<std::string> gold; // present on ans turns, for evaluation
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct DialogEpisode {
  std::vector<Turn> turns;
  friend bool operator==(const DialogEpisode&, const DialogEpisode&) = default;
};

struct Dataset {
  std::vector<DialogEpisode> episodes;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct FeedbackTemplates {
  std::vector<std::string> positive;  // exactly 6
  std::vector<std::string> negative;  // exactly 6, disjoint from positive
  void validate() const;
  static FeedbackTemplates defaults();
};

// Source of stories and answer candidates for dataset generation. The
// simulated world is the only implementation shipped here; other QA domains
// plug in behind the same interface.
class QaSource {
 public:
  virtual ~QaSource() = default;
  virtual EpisodeSkeleton next_episode(Rng& rng) const = 0;
  virtual const std::vector<std::string>& candidates() const = 0;
  // Coarse class of an answer, used by the hint mode.
  virtual std::string answer_class(const std::string& answer) const = 0;
};

class WorldSource final : public QaSource {
 public:
  explicit WorldSource(WorldConfig config);
  EpisodeSkeleton next_episode(Rng& rng) const override;
  const std::vector<std::string>& candidates() const override;
  std::string answer_class(const std::string& answer) const override;
  const WorldConfig& config() const { return config_; }

 private:
  WorldConfig config_;
};

// Policy answer draw: gold with probability pi_acc, otherwise a wrong answer
// (uniform, or the fixed biased answer part of the time).
std::string sample_answer(const Policy& policy, const std::string& gold,
                          const std::vector<std::string>& candidates, Rng& rng);

// Fixed two-way class map over the default location inventory.
std::string location_class(const std::string& location);

// Teacher reaction (and, for the help modes, the learner's help request and
// the teacher's post-help turn) to an answer. Mode 1 has no feedback at all
// and is a usage error here.
std::vector<Turn> render_feedback(const SupervisionMode& mode, bool correct,
                                  const std::string& gold, const Statement& supporting,
                                  const FeedbackTemplates& templates, Rng& rng);

DialogEpisode apply_mode(const EpisodeSkeleton& skeleton, const SupervisionMode& mode,
                         const Policy& policy, const QaSource& source,
                         const FeedbackTemplates& templates, Rng& rng);

struct SplitSizes {
  int train = 1000;
  int valid = 100;
  int test = 1000;
};

struct GeneratedSplits {
  Dataset train;
  Dataset valid;
  Dataset test;
};

// Generates train/valid/test with disjoint seed streams. Each split contains
// exactly the requested number of questions; the final episode is truncated
// right after the exchange of its quota-filling question. With share_stories
// the story stream does not depend on the mode, so all ten modes see the
// same underlying episodes for a given seed.
GeneratedSplits gen_dataset(const QaSource& source, const SupervisionMode& mode,
                            const Policy& policy, const SplitSizes& sizes,
                            std::uint64_t seed, bool share_stories = false);

GeneratedSplits gen_dataset(const WorldConfig& config, const SupervisionMode& mode,
                            const Policy& policy, const SplitSizes& sizes,
                            std::uint64_t seed, bool share_stories = false);

// Index one past the last feedback/help turn of the exchange whose learner
// answer sits at ans_index.
std::size_t exchange_end(const DialogEpisode& episode, std::size_t ans_index);

struct DatasetStats {
  int questions = 0;
  int correct = 0;
  int rewards = 0;
  int rewarded_correct = 0;
  double policy_accuracy() const { return questions ? double(correct) / questions : 0.0; }
  double reward_rate() const { return questions ? double(rewards) / questions : 0.0; }
  double reward_rate_among_correct() const {
    return correct ? double(rewarded_correct) / correct : 0.0;
  }
};

DatasetStats dataset_stats(const Dataset& data);

}  // namespace dialoglearn
