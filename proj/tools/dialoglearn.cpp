// Command-line front end: dataset generation, training, evaluation, the full
// experiment grid, gradient checking and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dialoglearn/checkpoint.hpp"
#include "dialoglearn/common.hpp"
#include "dialoglearn/dialogfmt.hpp"
#include "dialoglearn/experiment.hpp"
#include "dialoglearn/memn2n.hpp"
#include "dialoglearn/training.hpp"

namespace dl = dialoglearn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct HyperFlags {
  dl::Hyperparams hyper;
  bool expert_reward = false;
  bool no_expert_reward = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dim", hyper.dim, "embedding dimension");
    cmd->add_option("--hops", hyper.hops, "attention hops (1..3)");
    cmd->add_option("--lr", hyper.lr, "learning rate");
    cmd->add_option("--grad-clip", hyper.grad_clip, "max gradient norm per update");
    cmd->add_option("--epochs", hyper.epochs_max, "maximum training epochs");
    cmd->add_option("--batch", hyper.batch, "examples per gradient step");
    cmd->add_option("--patience", hyper.patience, "early-stopping patience in epochs");
    cmd->add_option("--k", hyper.k_negatives, "responses scored per fp step");
    cmd->add_option("--max-memories", hyper.max_memories, "memory slots");
    cmd->add_flag("--expert-reward", expert_reward,
                  "count feedback-free answers as rewarded for rbi");
    cmd->add_flag("--no-expert-reward", no_expert_reward,
                  "never count feedback-free answers as rewarded");
  }

  dl::Hyperparams resolve() const {
    dl::Hyperparams h = hyper;
    if (expert_reward && no_expert_reward)
      throw dl::UsageError("--expert-reward conflicts with --no-expert-reward");
    if (expert_reward) h.expert_reward = dl::ExpertReward::on;
    if (no_expert_reward) h.expert_reward = dl::ExpertReward::off;
    return h;
  }
};

struct WorldFlags {
  dl::WorldConfig world = dl::WorldConfig::defaults();

  void attach(CLI::App* cmd) {
    cmd->add_option("--stmts-min", world.statements_min,
                    "fresh statements before each question, lower bound");
    cmd->add_option("--stmts-max", world.statements_max,
                    "fresh statements before each question, upper bound");
    cmd->add_option("--questions-per-episode", world.questions_per_episode,
                    "questions per story");
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dl::DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw dl::DataError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dl::DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_split_stats(const char* name, const dl::Dataset& data) {
  dl::DatasetStats st = dl::dataset_stats(data);
  std::printf("split=%s questions=%d policy_acc=%.3f reward_rate=%.3f reward_rate_correct=%.3f\n",
              name, st.questions, st.policy_accuracy(), st.reward_rate(),
              st.reward_rate_among_correct());
}

int cmd_generate(int task, double pi, bool biased, double bias_prob,
                 const std::string& bias_answer, std::uint64_t seed,
                 const dl::SplitSizes& sizes, const dl::WorldConfig& world,
                 bool share_stories, const std::string& out_prefix) {
  dl::Policy policy;
  policy.pi_acc = pi;
  if (biased) policy.bias = dl::PolicyBias{bias_prob, bias_answer};
  dl::SupervisionMode mode = dl::SupervisionMode::task(task);
  dl::GeneratedSplits splits = dl::gen_dataset(world, mode, policy, sizes, seed, share_stories);
  dl::save_dataset(splits.train, out_prefix + "_train.txt");
  dl::save_dataset(splits.valid, out_prefix + "_valid.txt");
  dl::save_dataset(splits.test, out_prefix + "_test.txt");
  print_split_stats("train", splits.train);
  print_split_stats("valid", splits.valid);
  print_split_stats("test", splits.test);
  return kExitOk;
}

int cmd_train(const std::string& data_prefix, const std::string& train_path,
              const std::string& valid_path, const std::string& strategy_name,
              const dl::Hyperparams& hyper, int task, double pi,
              const std::string& out_path, std::string log_path) {
  std::string tr = train_path.empty() ? data_prefix + "_train.txt" : train_path;
  std::string va = valid_path.empty() ? data_prefix + "_valid.txt" : valid_path;
  if (data_prefix.empty() && (train_path.empty() || valid_path.empty()))
    throw dl::UsageError("pass --data PREFIX or both --train and --valid");
  dl::Dataset train_data = dl::load_dataset(tr);
  dl::Dataset valid_data = dl::load_dataset(va);
  dl::Strategy strategy = dl::strategy_from_name(strategy_name);

  dl::TrainOutput out = dl::train(strategy, train_data, valid_data, hyper);
  out.model.task = task;
  out.model.pi = pi;
  dl::save_checkpoint(out.model, out_path);

  if (log_path.empty()) log_path = out_path + ".log";
  std::string log;
  for (const auto& rec : out.log) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "epoch=%d train_loss=%.6f valid_acc=%.2f\n", rec.epoch,
                  rec.train_loss, rec.valid_acc);
    log += buf;
  }
  write_text(log_path, log);

  if (!out.warning.empty()) std::printf("warning: %s\n", out.warning.c_str());
  std::printf("best_epoch=%d valid_acc=%.2f%% checkpoint=%s\n", out.best_epoch,
              out.best_valid_acc, out_path.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  dl::TrainedModel model = dl::load_checkpoint(model_path);
  dl::Dataset data = dl::load_dataset(data_path);
  double acc = dl::evaluate(model, data);
  std::printf("test_acc=%.1f%%\n", acc);
  return kExitOk;
}

int cmd_experiment(const dl::GridSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::size_t total = spec.tasks.size() * spec.pis.size() * spec.strategies.size() *
                      spec.seeds.size();
  std::size_t done = 0;
  auto records = dl::run_grid(spec, [&](const dl::ResultRecord& r) {
    ++done;
    if (r.ok()) {
      std::printf("[%zu/%zu] task=%d pi=%s strategy=%s seed=%llu test_acc=%.2f%% (%.1fs)\n",
                  done, total, r.task, dl::format_pi(r.pi).c_str(),
                  dl::strategy_name(r.strategy), (unsigned long long)r.seed, r.test_acc,
                  r.wall_time_s);
    } else {
      std::printf("[%zu/%zu] task=%d pi=%s strategy=%s seed=%llu error: %s\n", done, total,
                  r.task, dl::format_pi(r.pi).c_str(), dl::strategy_name(r.strategy),
                  (unsigned long long)r.seed, r.error.c_str());
    }
    std::fflush(stdout);
  });
  auto summaries = dl::summarize(records);
  write_text(std::filesystem::path(out_dir) / "results.tsv",
             dl::results_tsv(records, summaries));
  write_text(std::filesystem::path(out_dir) / "results.jsonl",
             dl::results_jsonl(records, summaries));
  std::printf("\n%s", dl::render_markdown(records, summaries).c_str());
  for (const auto& s : summaries)
    std::printf("completed strategy=%s pi=%s: %d/%d tasks at >=95%%\n",
                dl::strategy_name(s.strategy), dl::format_pi(s.pi).c_str(), s.completed,
                s.total);
  return kExitOk;
}

// Random toy instance for the gradient gate: both loss paths, several
// dimensions, central differences at eps.
int cmd_gradcheck(std::uint64_t seed, double eps, double tolerance) {
  std::vector<std::string> texts = {
      "alpha beta gamma", "delta epsilon", "zeta eta theta iota", "kappa lambda mu",
      "nu xi omicron", "alpha delta zeta"};
  dl::Vocabulary vocab = dl::Vocabulary::build(texts);
  dl::CandidateSet cands =
      dl::CandidateSet::build({"alpha", "delta", "kappa nu", "beta"}, vocab);
  dl::ResponseSet resps = dl::ResponseSet::build(
      {"alpha beta", "gamma delta epsilon", "zeta kappa", "mu nu xi", "omicron alpha"},
      vocab);

  double worst = 0.0;
  bool ok = true;
  for (int d : {1, 8}) {
    for (int hops : {1, 2}) {
      dl::ModelConfig cfg{d, hops, 16};
      dl::ModelParams params(cfg, vocab.size());
      dl::Rng rng(dl::derive_seed(seed, (std::uint64_t)d, (std::uint64_t)hops));
      params.init(rng, 0.1);

      std::vector<dl::Bow> ctx = {dl::encode_bow(texts[0], vocab),
                                  dl::encode_bow(texts[1], vocab),
                                  dl::encode_bow(texts[2], vocab)};
      dl::Bow x = dl::encode_bow("alpha kappa omicron", vocab);
      int target = 2, selected = 1, resp_target = 3;
      std::vector<int> subset = {resp_target, 0, 1, 4};

      auto answer_loss_fn = [&]() { return dl::answer_loss(params, x, ctx, cands, target); };
      auto answer_grad_fn = [&]() {
        params.store().zero_grads();
        dl::answer_loss_grad(params, x, ctx, cands, target, 1.0);
      };
      dl::GradcheckReport rep =
          dl::gradcheck(params.store(), answer_loss_fn, answer_grad_fn, eps, 200, rng);
      std::printf("answer path d=%d hops=%d: max_rel_error=%.3e coords=%zu worst=%s\n", d,
                  hops, rep.max_rel_error, rep.coords_checked, rep.worst_param.c_str());
      worst = std::max(worst, rep.max_rel_error);

      auto fp_loss_fn = [&]() {
        return dl::fp_loss(params, x, ctx, cands, selected, resps, subset, 0);
      };
      auto fp_grad_fn = [&]() {
        params.store().zero_grads();
        dl::fp_loss_grad(params, x, ctx, cands, selected, resps, subset, 0, 1.0);
      };
      rep = dl::gradcheck(params.store(), fp_loss_fn, fp_grad_fn, eps, 200, rng);
      std::printf("fp path     d=%d hops=%d: max_rel_error=%.3e coords=%zu worst=%s\n", d,
                  hops, rep.max_rel_error, rep.coords_checked, rep.worst_param.c_str());
      worst = std::max(worst, rep.max_rel_error);
    }
  }
  ok = worst < tolerance;
  std::printf("%s max_rel_error=%.3e tolerance=%.1e\n", ok ? "PASS" : "FAIL", worst,
              tolerance);
  return ok ? kExitOk : kExitNumeric;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  auto records = dl::parse_results_tsv(read_text(in_path));
  auto summaries = dl::summarize(records);
  std::string md = dl::render_markdown(records, summaries);
  if (out_path.empty()) {
    std::printf("%s", md.c_str());
  } else {
    write_text(out_path, md);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dialog supervision tasks, memory-network training and the experiment grid"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value configuration file");

  // generate
  auto* gen = app.add_subcommand("generate", "write train/valid/test dialog files");
  int g_task = 1;
  double g_pi = 0.5;
  bool g_biased = false;
  double g_bias_prob = 0.5;
  std::string g_bias_answer = "bathroom";
  std::uint64_t g_seed = 1;
  dl::SplitSizes g_sizes;
  bool g_share = false;
  std::string g_out;
  WorldFlags g_world;
  gen->add_option("--task", g_task, "supervision mode 1..10")->required();
  gen->add_option("--pi", g_pi, "policy accuracy");
  gen->add_flag("--biased", g_biased, "biased policy: fixed answer on part of the wrong draws");
  gen->add_option("--bias-prob", g_bias_prob, "share of wrong draws that use the fixed answer");
  gen->add_option("--bias-answer", g_bias_answer, "the fixed wrong answer");
  gen->add_option("--seed", g_seed, "generation seed");
  gen->add_option("--train-size", g_sizes.train, "training questions");
  gen->add_option("--valid-size", g_sizes.valid, "validation questions");
  gen->add_option("--test-size", g_sizes.test, "test questions");
  gen->add_flag("--share-stories", g_share, "story stream independent of the mode");
  gen->add_option("--out", g_out, "output path prefix")->required();
  g_world.attach(gen);

  // train
  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string t_data, t_train, t_valid, t_strategy, t_out, t_log;
  int t_task = 0;
  double t_pi = 0.0;
  HyperFlags t_hyper;
  tr->add_option("--data", t_data, "dataset path prefix (expects _train.txt/_valid.txt)");
  tr->add_option("--train", t_train, "training file (overrides --data)");
  tr->add_option("--valid", t_valid, "validation file (overrides --data)");
  tr->add_option("--strategy", t_strategy, "imitation | rbi | fp | rbi_fp")->required();
  tr->add_option("--seed", t_hyper.hyper.seed, "training seed");
  tr->add_option("--task", t_task, "task number stamped into the checkpoint");
  tr->add_option("--pi", t_pi, "policy accuracy stamped into the checkpoint");
  tr->add_option("--out", t_out, "checkpoint path")->required();
  tr->add_option("--log", t_log, "training log path (default: <out>.log)");
  t_hyper.attach(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dialog file");
  std::string e_model, e_data;
  ev->add_option("--model", e_model, "checkpoint path")->required();
  ev->add_option("--data", e_data, "dialog file")->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "run the (task, pi, strategy, seed) grid");
  dl::GridSpec spec;
  std::vector<std::string> x_strategies = {"imitation", "rbi", "fp", "rbi_fp"};
  std::string x_out = "results";
  HyperFlags x_hyper;
  WorldFlags x_world;
  ex->add_option("--task", spec.tasks, "tasks to run")->delimiter(',');
  ex->add_option("--pi", spec.pis, "policy accuracies")->delimiter(',');
  ex->add_option("--strategy", x_strategies, "strategies to run")->delimiter(',');
  ex->add_option("--seed", spec.seeds, "training seeds")->delimiter(',');
  ex->add_option("--train-size", spec.sizes.train, "training questions");
  ex->add_option("--valid-size", spec.sizes.valid, "validation questions");
  ex->add_option("--test-size", spec.sizes.test, "test questions");
  ex->add_flag("--biased", spec.biased, "use the biased policy");
  ex->add_option("--bias-prob", spec.bias_prob, "share of wrong draws that use the fixed answer");
  ex->add_option("--bias-answer", spec.bias_answer, "the fixed wrong answer");
  ex->add_option("--data-seed", spec.data_seed, "dataset generation seed");
  ex->add_option("--threads", spec.threads, "parallel cells (0 = hardware)");
  ex->add_flag("--share-stories", spec.share_stories, "story stream independent of the mode");
  ex->add_option("--out", x_out, "output directory for results.tsv / results.jsonl");
  x_hyper.attach(ex);
  x_world.attach(ex);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  std::uint64_t c_seed = 1;
  double c_eps = 1e-5, c_tol = 1e-4;
  gc->add_option("--seed", c_seed, "instance seed");
  gc->add_option("--eps", c_eps, "central-difference step");
  gc->add_option("--tolerance", c_tol, "maximum relative error");

  // report
  auto* rp = app.add_subcommand("report", "render a results.tsv as a markdown table");
  std::string r_in, r_out;
  rp->add_option("--in", r_in, "results.tsv path")->required();
  rp->add_option("--out", r_out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      return cmd_generate(g_task, g_pi, g_biased, g_bias_prob, g_bias_answer, g_seed,
                          g_sizes, g_world.world, g_share, g_out);
    }
    if (*tr) {
      return cmd_train(t_data, t_train, t_valid, t_strategy, t_hyper.resolve(), t_task,
                       t_pi, t_out, t_log);
    }
    if (*ev) return cmd_eval(e_model, e_data);
    if (*ex) {
      spec.strategies.clear();
      for (const auto& s : x_strategies) spec.strategies.push_back(dl::strategy_from_name(s));
      spec.hyper = x_hyper.resolve();
      spec.world = x_world.world;
      return cmd_experiment(spec, x_out);
    }
    if (*gc) return cmd_gradcheck(c_seed, c_eps, c_tol);
    if (*rp) return cmd_report(r_in, r_out);
  } catch (const dl::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dl::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dl::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const dl::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const dl::TrainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
