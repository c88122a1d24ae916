#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dialoglearn/rng.hpp"

namespace dialoglearn {

// Simulated world of persons moving between locations. Stories are lists of
// movement statements interleaved with "where is X?" question points.
struct WorldConfig {
  std::vector<std::string> persons;
  std::vector<std::string> locations;
  std::vector<std::string> verbs;
  int statements_min = 2;  // fresh statements before each question
  int statements_max = 4;
  int questions_per_episode = 2;

  void validate() const;  // throws ConfigError naming the violated constraint
  static WorldConfig defaults();
};

struct Statement {
  std::string person;
  std::string verb;
  std::string location;
  friend bool operator==(const Statement&, const Statement&) = default;
};

struct QuestionPoint {
  std::string person;
  std::string gold;       // location of the person's most recent prior statement
  int support_index = 0;  // index of that statement in events
  friend bool operator==(const QuestionPoint&, const QuestionPoint&) = default;
};

using Event = std::variant<Statement, QuestionPoint>;

// Mode-independent story: what happened and what gets asked, with gold
// answers and supporting statements annotated by the generator.
struct EpisodeSkeleton {
  std::vector<Event> events;
  friend bool operator==(const EpisodeSkeleton&, const EpisodeSkeleton&) = default;
};

// "Mary went to the hallway" (no terminal period).
std::string statement_text(const Statement& s);

EpisodeSkeleton gen_skeleton(const WorldConfig& config, Rng& rng);

// Recomputes the answer by replaying the event list; independent of the
// annotations stored on the question point.
std::string gold_answer(const EpisodeSkeleton& skeleton, int question_index);

// Index of the asked person's most recent statement before the question,
// recomputed by replay.
int supporting_fact(const EpisodeSkeleton& skeleton, int question_index);

}  // namespace dialoglearn
