#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "gstrument/toynet.hpp"

namespace gstrument::toy {

/// Named networks plus free-form metadata. On disk: a directory holding
/// manifest.txt (key=value lines) and one GSTM file per weight and bias.
struct Checkpoint {
  std::map<std::string, ToyNet> nets;
  std::map<std::string, std::string> meta;

  const ToyNet& net(const std::string& name) const;
  const std::string& value(const std::string& key) const;
};

/// Writes into a temporary sibling directory, then swaps it into place.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace gstrument::toy
