#include "dialoglearn/taskgen.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

void Policy::validate(const std::vector<std::string>& candidates) const {
  if (pi_acc < 0.0 || pi_acc > 1.0) throw ConfigError("pi_acc must be in [0,1]");
  if (bias) {
    if (bias->prob_fixed_wrong < 0.0 || bias->prob_fixed_wrong > 1.0)
      throw ConfigError("bias probability must be in [0,1]");
    if (std::find(candidates.begin(), candidates.end(), bias->fixed_answer) ==
        candidates.end())
      throw ConfigError("bias fixed_answer '" + bias->fixed_answer +
                        "' is not a valid candidate");
  }
}

SupervisionMode SupervisionMode::task(int mode) {
  if (mode < 1 || mode > 10) throw ConfigError("supervision mode must be in 1..10");
  SupervisionMode m;
  m.mode = mode;
  m.reward_rate = mode == 6 ? 0.5 : (mode == 7 ? 0.0 : 1.0);
  return m;
}

bool is_feedback_kind(TurnKind k) {
  return k == TurnKind::fb || k == TurnKind::hint_fb || k == TurnKind::answer_fb ||
         k == TurnKind::fact_fb;
}

const char* kind_name(TurnKind k) {
  switch (k) {
    case TurnKind::stmt: return "stmt";
    case TurnKind::q: return "q";
    case TurnKind::ans: return "ans";
    case TurnKind::fb: return "fb";
    case TurnKind::help: return "help";
    case TurnKind::hint_fb: return "hint-fb";
    case TurnKind::answer_fb: return "answer-fb";
    case TurnKind::fact_fb: return "fact-fb";
  }
  return "?";
}

const char* speaker_name(Speaker s) { return s == Speaker::teacher ? "T" : "L"; }

void FeedbackTemplates::validate() const {
  if (positive.size() != 6 || negative.size() != 6)
    throw ConfigError("feedback templates: need exactly 6 positive and 6 negative");
  std::unordered_set<std::string> all(positive.begin(), positive.end());
  for (const auto& n : negative)
    if (!all.insert(n).second)
      throw ConfigError("feedback templates: positive and negative sets overlap");
  if (all.size() != 12) throw ConfigError("feedback templates: duplicate template");
}

FeedbackTemplates FeedbackTemplates::defaults() {
  FeedbackTemplates t;
  t.positive = {"Yes, that's right!", "Yes, that's correct!", "Correct!",
                "That's right!",      "Yes!",                 "Right."};
  t.negative = {"No, that's incorrect.", "Sorry, that's not it.", "Wrong.",
                "No, that is incorrect.", "No, that's not right.", "That's wrong."};
  return t;
}

WorldSource::WorldSource(WorldConfig config) : config_(std::move(config)) {
  config_.validate();
}

EpisodeSkeleton WorldSource::next_episode(Rng& rng) const {
  return gen_skeleton(config_, rng);
}

const std::vector<std::string>& WorldSource::candidates() const {
  return config_.locations;
}

std::string WorldSource::answer_class(const std::string& answer) const {
  return location_class(answer);
}

std::string sample_answer(const Policy& policy, const std::string& gold,
                          const std::vector<std::string>& candidates, Rng& rng) {
  auto it = std::find(candidates.begin(), candidates.end(), gold);
  if (it == candidates.end()) throw UsageError("gold answer is not a candidate");
  if (candidates.size() < 2) throw UsageError("need at least 2 candidates");
  if (rng.bernoulli(policy.pi_acc)) return gold;
  if (policy.bias && rng.bernoulli(policy.bias->prob_fixed_wrong) &&
      policy.bias->fixed_answer != gold) {
    return policy.bias->fixed_answer;
  }
  // Uniform over the wrong candidates.
  int gold_pos = static_cast<int>(it - candidates.begin());
  int pick = rng.uniform_int(0, static_cast<int>(candidates.size()) - 2);
  if (pick >= gold_pos) ++pick;
  return candidates[(std::size_t)pick];
}

std::string location_class(const std::string& location) {
  if (location == "kitchen" || location == "hallway" || location == "garden")
    return "downstairs";
  if (location == "bathroom" || location == "bedroom" || location == "office")
    return "upstairs";
  throw UsageError("unknown location '" + location + "'");
}

namespace {

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

Turn teacher(TurnKind kind, std::string text, int reward = 0) {
  Turn t;
  t.speaker = Speaker::teacher;
  t.kind = kind;
  t.text = std::move(text);
  t.reward = reward;
  return t;
}

Turn learner(TurnKind kind, std::string text) {
  Turn t;
  t.speaker = Speaker::learner;
  t.kind = kind;
  t.text = std::move(text);
  return t;
}

const std::string& pick(const std::vector<std::string>& xs, Rng& rng) {
  return xs[(std::size_t)rng.uniform_int(0, static_cast<int>(xs.size()) - 1)];
}

}  // namespace

std::vector<Turn> render_feedback(const SupervisionMode& mode, bool correct,
                                  const std::string& gold, const Statement& supporting,
                                  const FeedbackTemplates& templates, Rng& rng) {
  if (mode.mode < 2 || mode.mode > 10)
    throw UsageError("mode 1 dialogs carry no feedback");
  templates.validate();
  std::vector<Turn> out;
  if (correct) {
    int reward = rng.bernoulli(mode.reward_rate) ? 1 : 0;
    out.push_back(teacher(TurnKind::fb, pick(templates.positive, rng), reward));
    return out;
  }
  switch (mode.mode) {
    case 2:
    case 8:
      out.push_back(teacher(TurnKind::fb, pick(templates.negative, rng)));
      break;
    case 3:
    case 6:
    case 7:
      out.push_back(teacher(TurnKind::answer_fb, "No, the answer is " + gold + "."));
      break;
    case 4:
      out.push_back(
          teacher(TurnKind::hint_fb, "No, they are " + location_class(gold) + "."));
      break;
    case 5:
      out.push_back(
          teacher(TurnKind::fact_fb, "No, because " + statement_text(supporting) + "."));
      break;
    case 9:
      out.push_back(teacher(TurnKind::fb, pick(templates.negative, rng)));
      out.push_back(learner(TurnKind::help, "Can you help me?"));
      out.push_back(teacher(TurnKind::answer_fb, capitalize(gold) + "."));
      break;
    case 10:
      out.push_back(teacher(TurnKind::fb, pick(templates.negative, rng)));
      out.push_back(learner(TurnKind::help, "Can you help me?"));
      out.push_back(teacher(TurnKind::fact_fb,
                            "A relevant fact is " + statement_text(supporting) + "."));
      break;
  }
  return out;
}

DialogEpisode apply_mode(const EpisodeSkeleton& skeleton, const SupervisionMode& mode,
                         const Policy& policy, const QaSource& source,
                         const FeedbackTemplates& templates, Rng& rng) {
  policy.validate(source.candidates());
  DialogEpisode ep;
  for (std::size_t i = 0; i < skeleton.events.size(); ++i) {
    const Event& ev = skeleton.events[i];
    if (const Statement* s = std::get_if<Statement>(&ev)) {
      ep.turns.push_back(teacher(TurnKind::stmt, statement_text(*s) + "."));
      continue;
    }
    const QuestionPoint& qp = std::get<QuestionPoint>(ev);
    ep.turns.push_back(teacher(TurnKind::q, "Where is " + qp.person + "?"));
    bool expert = mode.mode == 1 || (mode.mode == 8 && rng.bernoulli(0.5));
    Turn ans = learner(TurnKind::ans, "");
    ans.gold = qp.gold;
    if (expert) {
      ans.text = qp.gold;
      ep.turns.push_back(std::move(ans));
      continue;
    }
    ans.text = sample_answer(policy, qp.gold, source.candidates(), rng);
    bool correct = ans.text == qp.gold;
    ep.turns.push_back(std::move(ans));
    const Statement& support =
        std::get<Statement>(skeleton.events[(std::size_t)qp.support_index]);
    for (Turn& t : render_feedback(mode, correct, qp.gold, support, templates, rng))
      ep.turns.push_back(std::move(t));
  }
  return ep;
}

std::size_t exchange_end(const DialogEpisode& episode, std::size_t ans_index) {
  std::size_t i = ans_index + 1;
  while (i < episode.turns.size()) {
    TurnKind k = episode.turns[i].kind;
    if (k == TurnKind::stmt || k == TurnKind::q) break;
    ++i;
  }
  return i;
}

namespace {

Dataset gen_split(const QaSource& source, const SupervisionMode& mode,
                  const Policy& policy, int questions, std::uint64_t story_seed,
                  std::uint64_t dialog_seed, const FeedbackTemplates& templates) {
  Dataset out;
  Rng story_rng(story_seed);
  Rng dialog_rng(dialog_seed);
  int have = 0;
  while (have < questions) {
    EpisodeSkeleton sk = source.next_episode(story_rng);
    DialogEpisode ep = apply_mode(sk, mode, policy, source, templates, dialog_rng);
    for (std::size_t i = 0; i < ep.turns.size(); ++i) {
      if (ep.turns[i].kind != TurnKind::ans) continue;
      ++have;
      if (have == questions) {
        ep.turns.resize(exchange_end(ep, i));
        break;
      }
    }
    out.episodes.push_back(std::move(ep));
  }
  return out;
}

}  // namespace

GeneratedSplits gen_dataset(const QaSource& source, const SupervisionMode& mode,
                            const Policy& policy, const SplitSizes& sizes,
                            std::uint64_t seed, bool share_stories) {
  if (sizes.train < 1 || sizes.valid < 1 || sizes.test < 1)
    throw ConfigError("split sizes must be >= 1");
  FeedbackTemplates templates = FeedbackTemplates::defaults();
  GeneratedSplits splits;
  Dataset* outs[3] = {&splits.train, &splits.valid, &splits.test};
  int counts[3] = {sizes.train, sizes.valid, sizes.test};
  for (int s = 0; s < 3; ++s) {
    std::uint64_t story_tag = share_stories ? 0 : static_cast<std::uint64_t>(mode.mode);
    std::uint64_t story_seed = derive_seed(seed, 1, (std::uint64_t)s, story_tag);
    std::uint64_t dialog_seed =
        derive_seed(seed, 2, (std::uint64_t)s, (std::uint64_t)mode.mode);
    *outs[s] = gen_split(source, mode, policy, counts[s], story_seed, dialog_seed,
                         templates);
  }
  return splits;
}

GeneratedSplits gen_dataset(const WorldConfig& config, const SupervisionMode& mode,
                            const Policy& policy, const SplitSizes& sizes,
                            std::uint64_t seed, bool share_stories) {
  WorldSource source(config);
  return gen_dataset(source, mode, policy, sizes, seed, share_stories);
}

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats st;
  for (const auto& ep : data.episodes) {
    for (std::size_t i = 0; i < ep.turns.size(); ++i) {
      const Turn& t = ep.turns[i];
      if (t.kind != TurnKind::ans) continue;
      ++st.questions;
      bool correct = t.gold && t.text == *t.gold;
      if (correct) ++st.correct;
      bool rewarded = false;
      for (std::size_t j = i + 1; j < exchange_end(ep, i); ++j)
        if (ep.turns[j].reward == 1) rewarded = true;
      if (rewarded) {
        ++st.rewards;
        if (correct) ++st.rewarded_correct;
      }
    }
  }
  return st;
}

}  // namespace dialoglearn
