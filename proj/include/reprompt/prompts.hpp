#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "reprompt/util.hpp"

namespace reprompt {

// A versioned system-instruction text. Assets are addressed as
// "<name>.v<version>" (e.g. "error_analysis.v1").
struct PromptAsset {
  std::string name;
  int version = 1;
  std::string text;
};

// Registry of system-instruction assets. The pipeline ships with an embedded
// set; a directory of <name>.v<version>.txt files can override or extend it,
// so instruction wording can evolve without a rebuild while replay caches
// keyed on the old wording stay reproducible.
class PromptLibrary {
 public:
  // The compiled-in assets: error_analysis.v1, autoprompter.v1,
  // codebook_induction.v1.
  static PromptLibrary embedded();

  // Embedded assets overlaid with every <name>.v<N>.txt found in dir.
  // Files that do not match the naming pattern are ignored; an unreadable
  // directory raises IoError.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  // Exact version lookup; throws ValidationError when absent.
  const PromptAsset& get(const std::string& name, int version) const;

  // Highest version of the named asset; throws ValidationError when absent.
  const PromptAsset& latest(const std::string& name) const;

  std::vector<std::string> names() const;

  void put(PromptAsset asset);

 private:
  std::map<std::string, std::map<int, PromptAsset>> assets_;
};

// Replaces every {{slot}} with its value. A slot left unfilled raises
// ValidationError naming it; values provided for slots the text lacks are
// ignored.
std::string render_prompt(const std::string& text,
                          const std::map<std::string, std::string>& slots);

}  // namespace reprompt
