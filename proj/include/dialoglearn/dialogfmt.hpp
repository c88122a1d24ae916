#pragma once

#include <filesystem>
#include <string>

#include "dialoglearn/taskgen.hpp"

namespace dialoglearn {

// Canonical on-disk dialog format, one turn per line:
//   <turn_index>\t<speaker>\t<kind>\t<text>\t<reward>\t<gold-or-dash>
// turn_index restarts at 1 per episode, episodes are separated by a line
// containing "==", and the first line is the header "#dialoglearn v1".
// UTF-8, LF line endings. parse(serialize(d)) == d for every valid dataset.

inline constexpr const char* kFormatHeader = "#dialoglearn v1";

std::string serialize(const Dataset& data);

Dataset parse(const std::string& text);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace dialoglearn
