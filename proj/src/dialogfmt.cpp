#include "dialoglearn/dialogfmt.hpp"

#include <fstream>
#include <sstream>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

namespace {

TurnKind kind_from(const std::string& s, int line_no) {
  if (s == "stmt") return TurnKind::stmt;
  if (s == "q") return TurnKind::q;
  if (s == "ans") return TurnKind::ans;
  if (s == "fb") return TurnKind::fb;
  if (s == "help") return TurnKind::help;
  if (s == "hint-fb") return TurnKind::hint_fb;
  if (s == "answer-fb") return TurnKind::answer_fb;
  if (s == "fact-fb") return TurnKind::fact_fb;
  throw ParseError("line " + std::to_string(line_no) + ": unknown turn kind '" + s + "'");
}

Speaker speaker_from(const std::string& s, int line_no) {
  if (s == "T") return Speaker::teacher;
  if (s == "L") return Speaker::learner;
  throw ParseError("line " + std::to_string(line_no) + ": unknown speaker '" + s + "'");
}

void check_text(const std::string& text) {
  if (text.find('\t') != std::string::npos || text.find('\n') != std::string::npos)
    throw DataError("turn text may not contain tabs or newlines");
}

void validate_turn(const Turn& t, int line_no) {
  auto fail = [&](const std::string& msg) {
    throw DataError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (t.speaker == Speaker::learner && t.kind != TurnKind::ans && t.kind != TurnKind::help)
    fail("learner turns must be 'ans' or 'help'");
  if (t.speaker == Speaker::teacher && (t.kind == TurnKind::ans || t.kind == TurnKind::help))
    fail("teacher turns may not be 'ans' or 'help'");
  if (t.reward == 1 && !(t.speaker == Speaker::teacher && is_feedback_kind(t.kind)))
    fail("reward on a non-feedback turn");
  if (t.gold && t.kind != TurnKind::ans) fail("gold annotation on a non-ans turn");
}

void validate_episode(const DialogEpisode& ep, int first_line) {
  bool pending_q = false;
  for (std::size_t i = 0; i < ep.turns.size(); ++i) {
    int line_no = first_line + static_cast<int>(i);
    if (ep.turns[i].kind == TurnKind::q) {
      if (pending_q)
        throw DataError("line " + std::to_string(line_no) + ": question left unanswered");
      pending_q = true;
    } else if (ep.turns[i].kind == TurnKind::ans) {
      if (!pending_q)
        throw DataError("line " + std::to_string(line_no) + ": answer without a question");
      pending_q = false;
    }
  }
  if (pending_q)
    throw DataError("line " + std::to_string(first_line + (int)ep.turns.size() - 1) +
                    ": episode ends with an unanswered question");
}

}  // namespace

std::string serialize(const Dataset& data) {
  std::string out(kFormatHeader);
  out += '\n';
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    if (e > 0) out += "==\n";
    const auto& turns = data.episodes[e].turns;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const Turn& t = turns[i];
      check_text(t.text);
      if (t.gold) check_text(*t.gold);
      out += std::to_string(i + 1);
      out += '\t';
      out += speaker_name(t.speaker);
      out += '\t';
      out += kind_name(t.kind);
      out += '\t';
      out += t.text;
      out += '\t';
      out += t.reward ? '1' : '0';
      out += '\t';
      out += t.gold ? *t.gold : "-";
      out += '\n';
    }
  }
  return out;
}

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw ParseError("empty input, missing header");
  ++line_no;
  if (line == std::string(kFormatHeader) + "\r")
    throw ParseError("line 1: CRLF line endings are not supported");
  if (line != kFormatHeader)
    throw ParseError("line 1: expected header '" + std::string(kFormatHeader) + "'");

  Dataset out;
  DialogEpisode cur;
  int cur_first_line = line_no + 1;
  bool saw_any_turn = false;

  auto flush_episode = [&]() {
    if (cur.turns.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty episode");
    validate_episode(cur, cur_first_line);
    out.episodes.push_back(std::move(cur));
    cur = DialogEpisode{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line == "==") {
      flush_episode();
      cur_first_line = line_no + 1;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 6)
      throw ParseError("line " + std::to_string(line_no) + ": expected 6 tab-separated fields, got " +
                       std::to_string(fields.size()));
    int expect_index = static_cast<int>(cur.turns.size()) + 1;
    if (fields[0] != std::to_string(expect_index))
      throw ParseError("line " + std::to_string(line_no) + ": expected turn index " +
                       std::to_string(expect_index) + ", got '" + fields[0] + "'");
    Turn t;
    t.speaker = speaker_from(fields[1], line_no);
    t.kind = kind_from(fields[2], line_no);
    t.text = fields[3];
    if (fields[4] == "0") {
      t.reward = 0;
    } else if (fields[4] == "1") {
      t.reward = 1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": reward must be 0 or 1");
    }
    if (fields[5] != "-") t.gold = fields[5];
    validate_turn(t, line_no);
    cur.turns.push_back(std::move(t));
    saw_any_turn = true;
  }
  if (!cur.turns.empty() || saw_any_turn || !out.episodes.empty()) {
    if (cur.turns.empty())
      throw ParseError("line " + std::to_string(line_no) + ": trailing episode separator");
    flush_episode();
  }
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << serialize(data);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace dialoglearn
