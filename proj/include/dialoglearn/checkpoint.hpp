#pragma once

#include <filesystem>
#include <string>

#include "dialoglearn/memn2n.hpp"
#include "dialoglearn/vocab.hpp"

namespace dialoglearn {

// A trained model together with everything needed to run it on new dialogs:
// vocabulary, the candidate answers and teacher responses observed in
// training, and run metadata.
struct TrainedModel {
  ModelParams params;
  Vocabulary vocab;
  CandidateSet candidates;
  ResponseSet responses;  // may be empty when the data had no feedback
  std::string strategy;
  int task = 0;
  double pi = 0.0;

  TrainedModel(ModelParams p, Vocabulary v, CandidateSet c, ResponseSet r)
      : params(std::move(p)), vocab(std::move(v)), candidates(std::move(c)),
        responses(std::move(r)) {}
};

// Versioned JSON container; doubles survive a save/load round trip exactly.
std::string checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const std::string& text);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dialoglearn
