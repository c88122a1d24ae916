#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "dialoglearn/common.hpp"
#include "dialoglearn/world.hpp"

using namespace dialoglearn;

namespace {

// The three-statement story used across the format examples:
// Mary -> hallway, John -> bathroom, Mary -> kitchen, then two questions.
EpisodeSkeleton sample_story() {
  EpisodeSkeleton sk;
  sk.events.push_back(Statement{"Mary", "went to", "hallway"});
  sk.events.push_back(Statement{"John", "moved to", "bathroom"});
  sk.events.push_back(Statement{"Mary", "travelled to", "kitchen"});
  sk.events.push_back(QuestionPoint{"Mary", "kitchen", 2});
  sk.events.push_back(QuestionPoint{"John", "bathroom", 1});
  return sk;
}

}  // namespace

TEST_CASE("config validation names the violated constraint") {
  WorldConfig c = WorldConfig::defaults();
  CHECK_NOTHROW(c.validate());

  c.persons.clear();
  CHECK_THROWS_WITH_AS(c.validate(), "persons list is empty", ConfigError);

  c = WorldConfig::defaults();
  c.locations.push_back("kitchen");
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = WorldConfig::defaults();
  c.statements_min = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = WorldConfig::defaults();
  c.statements_max = 1;  // below statements_min = 2
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = WorldConfig::defaults();
  c.questions_per_episode = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("gold answer is the location of the last movement of the asked person") {
  EpisodeSkeleton sk = sample_story();
  CHECK(gold_answer(sk, 3) == "kitchen");
  CHECK(gold_answer(sk, 4) == "bathroom");
}

TEST_CASE("supporting fact is the most recent prior statement, not earlier ones") {
  EpisodeSkeleton sk = sample_story();
  CHECK(supporting_fact(sk, 3) == 2);  // the kitchen move wins for Mary
  CHECK(supporting_fact(sk, 4) == 1);
}

TEST_CASE("single statement story") {
  EpisodeSkeleton sk;
  sk.events.push_back(Statement{"A", "went to", "garden"});
  sk.events.push_back(QuestionPoint{"A", "garden", 0});
  CHECK(gold_answer(sk, 1) == "garden");
  CHECK(supporting_fact(sk, 1) == 0);
}

TEST_CASE("asking about a statement index is a usage error") {
  EpisodeSkeleton sk = sample_story();
  CHECK_THROWS_AS(gold_answer(sk, 0), UsageError);
  CHECK_THROWS_AS(supporting_fact(sk, 99), UsageError);
}

TEST_CASE("statement_text renders person verb and location") {
  CHECK(statement_text(Statement{"Mary", "went to", "hallway"}) ==
        "Mary went to the hallway");
}

TEST_CASE("generated skeletons satisfy their invariants") {
  WorldConfig c = WorldConfig::defaults();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    EpisodeSkeleton sk = gen_skeleton(c, rng);

    int questions = 0;
    int fresh = 0;
    std::map<std::string, std::string> where;
    for (std::size_t i = 0; i < sk.events.size(); ++i) {
      if (const Statement* s = std::get_if<Statement>(&sk.events[i])) {
        // no self-moves
        if (where.count(s->person)) CHECK(where[s->person] != s->location);
        where[s->person] = s->location;
        ++fresh;
        continue;
      }
      const QuestionPoint& q = std::get<QuestionPoint>(sk.events[i]);
      ++questions;
      CHECK(fresh >= c.statements_min);
      CHECK(fresh <= c.statements_max);
      fresh = 0;
      // stored annotations agree with independent replay
      CHECK(q.gold == gold_answer(sk, static_cast<int>(i)));
      CHECK(q.support_index == supporting_fact(sk, static_cast<int>(i)));
      CHECK(where.at(q.person) == q.gold);
    }
    CHECK(questions == c.questions_per_episode);
  }
}

TEST_CASE("same config and seed reproduce the same skeleton") {
  WorldConfig c = WorldConfig::defaults();
  Rng a(123), b(123), d(124);
  CHECK(gen_skeleton(c, a) == gen_skeleton(c, b));
  Rng a2(123);
  CHECK_FALSE(gen_skeleton(c, a2) == gen_skeleton(c, d));
}

TEST_CASE("statement sampler is close to uniform over person-location pairs") {
  WorldConfig c = WorldConfig::defaults();
  std::map<std::pair<std::string, std::string>, int> counts;
  int total = 0;
  Rng rng(991);
  while (total < 12000) {
    EpisodeSkeleton sk = gen_skeleton(c, rng);
    for (const auto& e : sk.events) {
      if (const Statement* s = std::get_if<Statement>(&e)) {
        ++counts[{s->person, s->location}];
        ++total;
      }
    }
  }
  const double cells = static_cast<double>(c.persons.size() * c.locations.size());
  const double p = 1.0 / cells;
  const double sigma = std::sqrt(total * p * (1.0 - p));
  for (const auto& person : c.persons)
    for (const auto& loc : c.locations) {
      double dev = std::abs(counts[{person, loc}] - total * p);
      CHECK(dev < 5.0 * sigma);
    }
}
