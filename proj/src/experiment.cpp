#include "dialoglearn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

namespace {

std::uint64_t pi_bits(double pi) {
  std::uint64_t b = 0;
  static_assert(sizeof(b) == sizeof(pi));
  std::memcpy(&b, &pi, sizeof(b));
  return b;
}

ResultRecord run_cell(const GridSpec& spec, int task, double pi, Strategy strategy,
                      std::uint64_t seed) {
  ResultRecord rec;
  rec.task = task;
  rec.pi = pi;
  rec.strategy = strategy;
  rec.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  try {
    GeneratedSplits splits = cell_data(spec, task, pi);
    Hyperparams hyper = spec.hyper;
    hyper.seed = seed;
    TrainOutput out = train(strategy, splits.train, splits.valid, hyper);
    rec.valid_acc = out.best_valid_acc;
    rec.test_acc = evaluate(out.model, splits.test);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

GeneratedSplits cell_data(const GridSpec& spec, int task, double pi) {
  Policy policy;
  policy.pi_acc = pi;
  if (spec.biased) policy.bias = PolicyBias{spec.bias_prob, spec.bias_answer};
  SupervisionMode mode = SupervisionMode::task(task);
  std::uint64_t seed = derive_seed(spec.data_seed, (std::uint64_t)task, pi_bits(pi),
                                   spec.biased ? 1u : 0u);
  return gen_dataset(spec.world, mode, policy, spec.sizes, seed, spec.share_stories);
}

std::vector<ResultRecord> run_grid(const GridSpec& spec,
                                   const std::function<void(const ResultRecord&)>& on_cell) {
  struct Cell {
    int task;
    double pi;
    Strategy strategy;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int task : spec.tasks)
    for (double pi : spec.pis)
      for (Strategy s : spec.strategies)
        for (std::uint64_t seed : spec.seeds) cells.push_back(Cell{task, pi, s, seed});

  std::vector<ResultRecord> results(cells.size());
  if (cells.empty()) return results;

  unsigned n_threads = spec.threads > 0 ? (unsigned)spec.threads
                                        : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, (unsigned)cells.size());

  std::atomic<std::size_t> next{0};
  std::mutex cb_mutex;
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      const Cell& c = cells[i];
      results[i] = run_cell(spec, c.task, c.pi, c.strategy, c.seed);
      if (on_cell) {
        std::lock_guard<std::mutex> lock(cb_mutex);
        on_cell(results[i]);
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return results;
}

std::vector<CompletedSummary> summarize(const std::vector<ResultRecord>& records,
                                        double threshold) {
  // Mean test accuracy per (strategy, pi, task) over seeds; failed cells
  // count as not completed.
  std::map<std::pair<int, std::uint64_t>, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : records) {
    auto key = std::make_pair(static_cast<int>(r.strategy), pi_bits(r.pi));
    auto& cell = acc[key][r.task];
    if (r.ok()) {
      cell.first += r.test_acc;
    } else {
      cell.first += -1e9;  // poison: an errored seed fails the task
    }
    cell.second += 1;
  }
  std::vector<CompletedSummary> out;
  for (const auto& [key, tasks] : acc) {
    CompletedSummary s;
    s.strategy = static_cast<Strategy>(key.first);
    double pi;
    std::uint64_t bits = key.second;
    std::memcpy(&pi, &bits, sizeof(pi));
    s.pi = pi;
    s.total = static_cast<int>(tasks.size());
    for (const auto& [task, sum_count] : tasks) {
      double mean = sum_count.first / sum_count.second;
      if (mean >= threshold) ++s.completed;
    }
    out.push_back(s);
  }
  return out;
}

std::string format_pi(double pi) {
  std::ostringstream ss;
  ss << pi;
  return ss.str();
}

namespace {

std::string format_acc(double acc) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", acc);
  return buf;
}

}  // namespace

std::string results_tsv(const std::vector<ResultRecord>& records,
                        const std::vector<CompletedSummary>& summaries) {
  std::string out = "task\tpi\tstrategy\tseed\tvalid_acc\ttest_acc\twall_time_s\n";
  for (const auto& r : records) {
    out += std::to_string(r.task);
    out += '\t';
    out += format_pi(r.pi);
    out += '\t';
    out += strategy_name(r.strategy);
    out += '\t';
    out += std::to_string(r.seed);
    out += '\t';
    if (r.ok()) {
      out += format_acc(r.valid_acc);
      out += '\t';
      out += format_acc(r.test_acc);
    } else {
      out += "-\t-";
    }
    out += '\t';
    out += format_acc(r.wall_time_s);
    out += '\n';
  }
  for (const auto& s : summaries) {
    out += "completed\t";
    out += format_pi(s.pi);
    out += '\t';
    out += strategy_name(s.strategy);
    out += "\t-\t-\t";
    out += std::to_string(s.completed) + "/" + std::to_string(s.total);
    out += "\t-\n";
  }
  return out;
}

std::string results_jsonl(const std::vector<ResultRecord>& records,
                          const std::vector<CompletedSummary>& summaries) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::json j;
    j["type"] = "cell";
    j["task"] = r.task;
    j["pi"] = r.pi;
    j["strategy"] = strategy_name(r.strategy);
    j["seed"] = r.seed;
    if (r.ok()) {
      j["valid_acc"] = r.valid_acc;
      j["test_acc"] = r.test_acc;
    } else {
      j["error"] = r.error;
    }
    j["wall_time_s"] = r.wall_time_s;
    out += j.dump();
    out += '\n';
  }
  for (const auto& s : summaries) {
    nlohmann::json j;
    j["type"] = "completed";
    j["pi"] = s.pi;
    j["strategy"] = strategy_name(s.strategy);
    j["completed"] = s.completed;
    j["total"] = s.total;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ResultRecord> parse_results_tsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("results file is empty");
  if (line.rfind("task\t", 0) != 0)
    throw ParseError("results file is missing its header line");
  std::vector<ResultRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        f.push_back(line.substr(start));
        break;
      }
      f.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (f.size() != 7)
      throw ParseError("results line " + std::to_string(line_no) + ": expected 7 fields");
    if (f[0] == "completed") continue;  // summaries are recomputed
    try {
      ResultRecord r;
      r.task = std::stoi(f[0]);
      r.pi = std::stod(f[1]);
      r.strategy = strategy_from_name(f[2]);
      r.seed = std::stoull(f[3]);
      if (f[4] == "-" || f[5] == "-") {
        r.error = "failed";
      } else {
        r.valid_acc = std::stod(f[4]);
        r.test_acc = std::stod(f[5]);
      }
      if (f[6] != "-") r.wall_time_s = std::stod(f[6]);
      out.push_back(r);
    } catch (const std::invalid_argument&) {
      throw ParseError("results line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

std::string render_markdown(const std::vector<ResultRecord>& records,
                            const std::vector<CompletedSummary>& summaries) {
  // Column per (strategy, pi) in first-seen order; rows are tasks with the
  // mean test accuracy over seeds.
  std::vector<std::pair<Strategy, double>> columns;
  std::vector<int> tasks;
  for (const auto& r : records) {
    auto col = std::make_pair(r.strategy, r.pi);
    if (std::find(columns.begin(), columns.end(), col) == columns.end())
      columns.push_back(col);
    if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end())
      tasks.push_back(r.task);
  }
  std::sort(tasks.begin(), tasks.end());

  auto cell_text = [&](int task, Strategy s, double pi) -> std::string {
    double sum = 0.0;
    int n = 0;
    bool failed = false;
    for (const auto& r : records) {
      if (r.task != task || r.strategy != s || r.pi != pi) continue;
      if (!r.ok()) {
        failed = true;
        continue;
      }
      sum += r.test_acc;
      ++n;
    }
    if (n == 0) return failed ? "err" : "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", sum / n);
    return failed ? std::string(buf) + "*" : std::string(buf);
  };

  std::string out = "| task |";
  for (const auto& [s, pi] : columns)
    out += std::string(" ") + strategy_name(s) + " pi=" + format_pi(pi) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  out += "\n";
  for (int task : tasks) {
    out += "| " + std::to_string(task) + " |";
    for (const auto& [s, pi] : columns) out += " " + cell_text(task, s, pi) + " |";
    out += "\n";
  }
  out += "| completed (>=95%) |";
  for (const auto& [s, pi] : columns) {
    std::string text = "-";
    for (const auto& sum : summaries)
      if (sum.strategy == s && sum.pi == pi)
        text = std::to_string(sum.completed) + "/" + std::to_string(sum.total);
    out += " " + text + " |";
  }
  out += "\n";
  return out;
}

}  // namespace dialoglearn
