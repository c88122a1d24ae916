#include "dialoglearn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

namespace {
constexpr const char* kCkptFormat = "dialoglearn-ckpt-v1";
}

std::string checkpoint_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["format"] = kCkptFormat;
  j["model"] = {{"d", model.params.config().d},
                {"hops", model.params.config().hops},
                {"max_memories", model.params.config().max_memories}};
  j["meta"] = {{"strategy", model.strategy}, {"task", model.task}, {"pi", model.pi}};
  j["vocab"] = model.vocab.words();
  j["candidates"] = model.candidates.display;
  j["responses"] = model.responses.display;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& name : model.params.store().names()) {
    const Matrix& m = model.params.store().value(name);
    params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
  }
  j["params"] = params;
  return j.dump(1, '\t') + "\n";
}

TrainedModel checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCkptFormat)
      throw ParseError("unsupported checkpoint format '" +
                       j.at("format").get<std::string>() + "'");
    ModelConfig cfg;
    cfg.d = j.at("model").at("d").get<int>();
    cfg.hops = j.at("model").at("hops").get<int>();
    cfg.max_memories = j.at("model").at("max_memories").get<int>();

    Vocabulary vocab = Vocabulary::from_words(j.at("vocab").get<std::vector<std::string>>());
    CandidateSet cands =
        CandidateSet::build(j.at("candidates").get<std::vector<std::string>>(), vocab);
    ResponseSet resps =
        ResponseSet::build(j.at("responses").get<std::vector<std::string>>(), vocab);

    ModelParams params(cfg, vocab.size());
    for (const auto& name : params.store().names()) {
      const auto& pj = j.at("params").at(name);
      Matrix& m = params.store().value(name);
      if (pj.at("rows").get<int>() != m.rows() || pj.at("cols").get<int>() != m.cols())
        throw DataError("checkpoint parameter '" + name + "' has unexpected shape");
      auto data = pj.at("data").get<std::vector<double>>();
      if (data.size() != m.data().size())
        throw DataError("checkpoint parameter '" + name + "' has wrong element count");
      m.data() = std::move(data);
    }

    TrainedModel model(std::move(params), std::move(vocab), std::move(cands),
                       std::move(resps));
    model.strategy = j.at("meta").at("strategy").get<std::string>();
    model.task = j.at("meta").at("task").get<int>();
    model.pi = j.at("meta").at("pi").get<double>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << checkpoint_to_json(model);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace dialoglearn
