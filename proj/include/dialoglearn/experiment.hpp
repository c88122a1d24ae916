#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dialoglearn/training.hpp"

namespace dialoglearn {

// One cell of the experiment grid: a (task, policy accuracy, strategy, seed)
// combination with its measured accuracies.
struct ResultRecord {
  int task = 0;
  double pi = 0.0;
  Strategy strategy = Strategy::imitation;
  std::uint64_t seed = 0;
  double valid_acc = -1.0;  // percent; -1 when the cell failed
  double test_acc = -1.0;
  double wall_time_s = 0.0;
  std::string error;  // non-empty when the cell failed

  bool ok() const { return error.empty(); }
};

struct GridSpec {
  std::vector<int> tasks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> pis = {0.5, 0.1, 0.01};
  std::vector<Strategy> strategies = {Strategy::imitation, Strategy::rbi, Strategy::fp,
                                      Strategy::rbi_fp};
  std::vector<std::uint64_t> seeds = {1};
  SplitSizes sizes;
  WorldConfig world = WorldConfig::defaults();
  Hyperparams hyper;
  bool biased = false;  // part of the wrong answers becomes a fixed location
  double bias_prob = 0.5;
  std::string bias_answer = "bathroom";
  std::uint64_t data_seed = 20240101;
  int threads = 0;  // 0 = hardware concurrency
  bool share_stories = false;
};

// Datasets for one grid cell. The data depends on (task, pi, data_seed) but
// not on the strategy or training seed, so strategies compete on identical
// dialogs.
GeneratedSplits cell_data(const GridSpec& spec, int task, double pi);

// Runs every cell; failures are recorded in the result and do not stop the
// grid. Cells run in parallel, results come back in deterministic order.
std::vector<ResultRecord> run_grid(const GridSpec& spec,
                                   const std::function<void(const ResultRecord&)>& on_cell = {});

// Tasks per (strategy, pi) whose mean test accuracy over seeds reaches the
// threshold.
struct CompletedSummary {
  Strategy strategy = Strategy::imitation;
  double pi = 0.0;
  int completed = 0;
  int total = 0;
};

std::vector<CompletedSummary> summarize(const std::vector<ResultRecord>& records,
                                        double threshold = 95.0);

std::string results_tsv(const std::vector<ResultRecord>& records,
                        const std::vector<CompletedSummary>& summaries);
std::string results_jsonl(const std::vector<ResultRecord>& records,
                          const std::vector<CompletedSummary>& summaries);
std::vector<ResultRecord> parse_results_tsv(const std::string& text);

// Accuracy grid as a markdown table, tasks down the rows, one column per
// (strategy, pi), with the completed-task counts in the final row.
std::string render_markdown(const std::vector<ResultRecord>& records,
                            const std::vector<CompletedSummary>& summaries);

std::string format_pi(double pi);

}  // namespace dialoglearn
