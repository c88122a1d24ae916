#include "dialoglearn/training.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "dialoglearn/common.hpp"
#include "dialoglearn/memn2n.hpp"

namespace dialoglearn {

Strategy strategy_from_name(const std::string& name) {
  if (name == "imitation") return Strategy::imitation;
  if (name == "rbi") return Strategy::rbi;
  if (name == "fp") return Strategy::fp;
  if (name == "rbi_fp") return Strategy::rbi_fp;
  throw UsageError("unknown strategy '" + name +
                   "' (expected imitation, rbi, fp or rbi_fp)");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::imitation: return "imitation";
    case Strategy::rbi: return "rbi";
    case Strategy::fp: return "fp";
    case Strategy::rbi_fp: return "rbi_fp";
  }
  return "?";
}

void Hyperparams::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (hops < 1 || hops > 3) throw ConfigError("hops must be in 1..3");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (epochs_max < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (k_negatives < 1) throw ConfigError("k must be >= 1");
  if (max_memories < 1) throw ConfigError("max_memories must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (grad_clip <= 0.0) throw ConfigError("grad_clip must be > 0");
  if (init_sigma <= 0.0) throw ConfigError("init_sigma must be > 0");
}

std::vector<TrainingExample> extract_examples(const Dataset& data) {
  std::vector<TrainingExample> out;
  for (const auto& ep : data.episodes) {
    std::vector<std::string> story;  // stmt + q texts seen so far
    std::optional<std::string> pending_q;
    std::vector<std::string> pending_ctx;
    for (std::size_t i = 0; i < ep.turns.size(); ++i) {
      const Turn& t = ep.turns[i];
      switch (t.kind) {
        case TurnKind::stmt:
          story.push_back(t.text);
          break;
        case TurnKind::q:
          pending_ctx = story;
          pending_q = t.text;
          break;
        case TurnKind::ans: {
          if (!pending_q) throw DataError("answer turn before any question");
          TrainingExample ex;
          ex.x = *pending_q;
          ex.context = pending_ctx;
          ex.answer = t.text;
          ex.gold = t.gold;
          std::size_t end = exchange_end(ep, i);
          std::string response;
          for (std::size_t j = i + 1; j < end; ++j) {
            if (ep.turns[j].reward == 1) ex.reward = 1;
            if (ep.turns[j].speaker != Speaker::teacher) continue;
            if (!response.empty()) response += ' ';
            response += ep.turns[j].text;
          }
          ex.response = std::move(response);
          out.push_back(std::move(ex));
          pending_q.reset();
          break;
        }
        default:
          break;  // feedback and help turns never enter the context
      }
    }
  }
  return out;
}

namespace {

struct Encoded {
  Bow x;
  std::vector<Bow> ctx;
  int answer = -1;
  int gold = -1;
  bool has_gold = false;
  int response = -1;
  bool rewarded = false;
  bool expert_style = false;  // the answer got no reaction at all
};

Encoded encode_example(const TrainingExample& ex, const Vocabulary& vocab,
                       const CandidateSet& candidates, const ResponseSet& responses,
                       int max_memories) {
  Encoded e;
  e.x = encode_bow(ex.x, vocab);
  std::size_t n = ex.context.size();
  std::size_t start = n > (std::size_t)max_memories ? n - (std::size_t)max_memories : 0;
  e.ctx.reserve(n - start);
  for (std::size_t i = start; i < n; ++i) e.ctx.push_back(encode_bow(ex.context[i], vocab));
  e.answer = candidates.find(ex.answer);
  if (ex.gold) {
    e.has_gold = true;
    e.gold = candidates.find(*ex.gold);
  }
  if (!ex.response.empty()) e.response = responses.find(ex.response);
  e.rewarded = ex.reward == 1;
  e.expert_style = ex.response.empty();
  return e;
}

std::vector<std::string> all_turn_texts(const Dataset& data) {
  std::vector<std::string> texts;
  for (const auto& ep : data.episodes)
    for (const auto& t : ep.turns) texts.push_back(t.text);
  return texts;
}

double accuracy_percent(const ModelParams& params, const CandidateSet& candidates,
                        const std::vector<Encoded>& examples) {
  if (examples.empty()) return 0.0;
  int correct = 0;
  for (const auto& e : examples) {
    int pred = predict(params, e.x, e.ctx, candidates);
    if (e.has_gold && pred == e.gold) ++correct;
  }
  return 100.0 * correct / static_cast<double>(examples.size());
}

}  // namespace

TrainOutput train(Strategy strategy, const Dataset& train_data, const Dataset& valid_data,
                  const Hyperparams& hyper) {
  hyper.validate();
  std::vector<TrainingExample> ex_tr = extract_examples(train_data);
  if (ex_tr.empty()) throw DataError("training set contains no questions");
  std::vector<TrainingExample> ex_va = extract_examples(valid_data);

  Vocabulary vocab = Vocabulary::build(all_turn_texts(train_data));
  std::set<std::string> answer_set, response_set;
  for (const auto& ex : ex_tr) {
    answer_set.insert(ex.answer);
    if (!ex.response.empty()) response_set.insert(ex.response);
  }
  CandidateSet candidates = CandidateSet::build(
      std::vector<std::string>(answer_set.begin(), answer_set.end()), vocab);
  ResponseSet responses = ResponseSet::build(
      std::vector<std::string>(response_set.begin(), response_set.end()), vocab);

  std::vector<Encoded> enc_tr, enc_va;
  enc_tr.reserve(ex_tr.size());
  for (const auto& ex : ex_tr)
    enc_tr.push_back(encode_example(ex, vocab, candidates, responses, hyper.max_memories));
  enc_va.reserve(ex_va.size());
  for (const auto& ex : ex_va)
    enc_va.push_back(encode_example(ex, vocab, candidates, responses, hyper.max_memories));

  bool expert_reward = hyper.expert_reward == ExpertReward::on ||
                       (hyper.expert_reward == ExpertReward::auto_detect &&
                        response_set.empty());
  auto rbi_eligible = [&](const Encoded& e) {
    return e.rewarded || (expert_reward && e.expert_style);
  };

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < enc_tr.size(); ++i) {
    const Encoded& e = enc_tr[i];
    bool in = false;
    switch (strategy) {
      case Strategy::imitation: in = true; break;
      case Strategy::rbi: in = rbi_eligible(e); break;
      case Strategy::fp: in = e.response >= 0; break;
      case Strategy::rbi_fp: in = rbi_eligible(e) || e.response >= 0; break;
    }
    if (in) pool.push_back(i);
  }

  if (strategy == Strategy::fp && pool.empty())
    throw TrainError(
        "the training data carries no teacher responses, so forward prediction has "
        "nothing to predict; train with imitation or rbi instead");

  ModelConfig cfg{hyper.dim, hyper.hops, hyper.max_memories};
  ModelParams params(cfg, vocab.size());
  Rng init_rng(derive_seed(hyper.seed, 101));
  params.init(init_rng, hyper.init_sigma);

  TrainOutput out{TrainedModel(params, vocab, candidates, responses), {}, 0.0, 0, ""};
  out.model.strategy = strategy_name(strategy);

  if (pool.empty()) {
    out.warning = "no trainable examples for strategy " +
                  std::string(strategy_name(strategy)) +
                  "; returning the initialized model";
    out.best_valid_acc = accuracy_percent(params, candidates, enc_va);
    return out;
  }

  Rng rng(derive_seed(hyper.seed, 202));
  ParamStore best_store = params.store();
  double best_acc = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= hyper.epochs_max; ++epoch) {
    rng.shuffle(pool);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (std::size_t b = 0; b < pool.size(); b += (std::size_t)hyper.batch) {
      std::size_t e_end = std::min(pool.size(), b + (std::size_t)hyper.batch);
      if (strategy == Strategy::imitation || strategy == Strategy::rbi) {
        double scale = 1.0 / static_cast<double>(e_end - b);
        for (std::size_t k = b; k < e_end; ++k) {
          const Encoded& e = enc_tr[pool[k]];
          loss_sum += answer_loss_grad(params, e.x, e.ctx, candidates, e.answer, scale);
          ++loss_count;
        }
        params.store().clip_grad_norm(hyper.grad_clip);
        params.store().sgd_step(hyper.lr);
        continue;
      }

      // Forward-prediction step over the batch members that have a response.
      std::vector<std::size_t> fp_part, rbi_part;
      for (std::size_t k = b; k < e_end; ++k) {
        const Encoded& e = enc_tr[pool[k]];
        if (e.response >= 0 &&
            (strategy == Strategy::fp || strategy == Strategy::rbi_fp))
          fp_part.push_back(pool[k]);
        if (strategy == Strategy::rbi_fp && rbi_eligible(e)) rbi_part.push_back(pool[k]);
      }
      double batch_n = static_cast<double>(e_end - b);
      if (!fp_part.empty()) {
        double scale = strategy == Strategy::rbi_fp ? 1.0 / batch_n
                                                    : 1.0 / static_cast<double>(fp_part.size());
        for (std::size_t idx : fp_part) {
          const Encoded& e = enc_tr[idx];
          std::vector<int> subset =
              subsample_negatives(responses, e.response, hyper.k_negatives, rng);
          loss_sum += fp_loss_grad(params, e.x, e.ctx, candidates, e.answer, responses,
                                   subset, 0, scale);
          ++loss_count;
        }
        params.store().clip_grad_norm(hyper.grad_clip);
        params.store().sgd_step(hyper.lr);
      }
      if (!rbi_part.empty()) {
        double scale = 1.0 / batch_n;
        for (std::size_t idx : rbi_part) {
          const Encoded& e = enc_tr[idx];
          loss_sum += answer_loss_grad(params, e.x, e.ctx, candidates, e.answer, scale);
          ++loss_count;
        }
        params.store().clip_grad_norm(hyper.grad_clip);
        params.store().sgd_step(hyper.lr);
      }
    }

    double valid_acc = accuracy_percent(params, candidates, enc_va);
    double mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    out.log.push_back(EpochRecord{epoch, mean_loss, valid_acc});
    if (valid_acc > best_acc) {
      best_acc = valid_acc;
      best_epoch = epoch;
      best_store = params.store();
    } else if (epoch - best_epoch >= hyper.patience) {
      break;
    }
  }

  out.model.params.store() = best_store;
  out.best_valid_acc = best_acc;
  out.best_epoch = best_epoch;
  return out;
}

double evaluate(const TrainedModel& model, const Dataset& data) {
  std::vector<TrainingExample> examples = extract_examples(data);
  if (examples.empty()) throw DataError("dataset contains no questions");
  int correct = 0;
  for (const auto& ex : examples) {
    if (!ex.gold) throw DataError("answer turn is missing its gold annotation");
    Encoded e = encode_example(ex, model.vocab, model.candidates, model.responses,
                               model.params.config().max_memories);
    int pred = predict(model.params, e.x, e.ctx, model.candidates);
    if (e.has_gold && pred == e.gold) ++correct;
  }
  return 100.0 * correct / static_cast<double>(examples.size());
}

}  // namespace dialoglearn
