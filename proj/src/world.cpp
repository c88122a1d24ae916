#include "dialoglearn/world.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

namespace {

void require_nonempty_unique(const std::vector<std::string>& xs, const char* what) {
  if (xs.empty()) throw ConfigError(std::string(what) + " list is empty");
  std::unordered_set<std::string> seen;
  for (const auto& x : xs) {
    if (!seen.insert(x).second)
      throw ConfigError(std::string(what) + " list has duplicate entry '" + x + "'");
  }
}

}  // namespace

void WorldConfig::validate() const {
  require_nonempty_unique(persons, "persons");
  require_nonempty_unique(locations, "locations");
  require_nonempty_unique(verbs, "verbs");
  if (statements_min < 1)
    throw ConfigError("statements_min must be >= 1");
  if (statements_max < statements_min)
    throw ConfigError("statements_max must be >= statements_min");
  if (questions_per_episode < 1)
    throw ConfigError("questions_per_episode must be >= 1");
  if (locations.size() < 2)
    throw ConfigError("need at least 2 locations so a movement can change location");
}

WorldConfig WorldConfig::defaults() {
  WorldConfig c;
  c.persons = {"Mary", "John", "Daniel", "Sandra"};
  c.locations = {"kitchen", "hallway", "bathroom", "bedroom", "garden", "office"};
  c.verbs = {"went to", "moved to", "travelled to", "journeyed to"};
  return c;
}

std::string statement_text(const Statement& s) {
  return s.person + " " + s.verb + " the " + s.location;
}

EpisodeSkeleton gen_skeleton(const WorldConfig& config, Rng& rng) {
  config.validate();
  EpisodeSkeleton sk;
  // current location per person; -1 means not placed yet
  std::unordered_map<std::string, int> where;
  std::vector<std::string> seen_persons;  // persons with at least one statement
  std::unordered_map<std::string, int> last_stmt;

  for (int q = 0; q < config.questions_per_episode; ++q) {
    int fresh = rng.uniform_int(config.statements_min, config.statements_max);
    for (int i = 0; i < fresh; ++i) {
      const std::string& person =
          config.persons[static_cast<std::size_t>(rng.uniform_int(0, (int)config.persons.size() - 1))];
      // A movement always changes location, so the most recent statement is
      // always the one that places the person.
      int cur = where.count(person) ? where[person] : -1;
      int n = static_cast<int>(config.locations.size());
      int pick;
      if (cur < 0) {
        pick = rng.uniform_int(0, n - 1);
      } else {
        pick = rng.uniform_int(0, n - 2);
        if (pick >= cur) ++pick;
      }
      const std::string& verb =
          config.verbs[static_cast<std::size_t>(rng.uniform_int(0, (int)config.verbs.size() - 1))];
      if (!where.count(person)) seen_persons.push_back(person);
      where[person] = pick;
      last_stmt[person] = static_cast<int>(sk.events.size());
      sk.events.push_back(Statement{person, verb, config.locations[(std::size_t)pick]});
    }
    const std::string& asked =
        seen_persons[static_cast<std::size_t>(rng.uniform_int(0, (int)seen_persons.size() - 1))];
    QuestionPoint qp;
    qp.person = asked;
    qp.gold = config.locations[(std::size_t)where[asked]];
    qp.support_index = last_stmt[asked];
    sk.events.push_back(qp);
  }
  return sk;
}

namespace {

const QuestionPoint& question_at(const EpisodeSkeleton& skeleton, int question_index) {
  if (question_index < 0 || question_index >= static_cast<int>(skeleton.events.size()))
    throw UsageError("question index out of range");
  const Event& e = skeleton.events[(std::size_t)question_index];
  const QuestionPoint* qp = std::get_if<QuestionPoint>(&e);
  if (!qp) throw UsageError("event at index is a statement, not a question");
  return *qp;
}

}  // namespace

std::string gold_answer(const EpisodeSkeleton& skeleton, int question_index) {
  int idx = supporting_fact(skeleton, question_index);
  return std::get<Statement>(skeleton.events[(std::size_t)idx]).location;
}

int supporting_fact(const EpisodeSkeleton& skeleton, int question_index) {
  const QuestionPoint& qp = question_at(skeleton, question_index);
  for (int i = question_index - 1; i >= 0; --i) {
    const Statement* s = std::get_if<Statement>(&skeleton.events[(std::size_t)i]);
    if (s && s->person == qp.person) return i;
  }
  // Unreachable for skeletons satisfying the invariants.
  throw DataError("question about a person with no prior statement");
}

}  // namespace dialoglearn
