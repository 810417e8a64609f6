#include "reprompt/prompts.hpp"

#include <regex>

namespace reprompt {

namespace {

const char* kErrorAnalysisV1 = R"PROMPT(You are an expert Prompt Engineer specializing in code editing prompts for a Code LLM. Your task is to help software engineers improve their prompts to achieve desired code modifications.

You will receive the following inputs:

1. **Current Prompt:** The engineer's initial prompt to the Code LLM.

2. **Code Context:** The complete code snippet being edited.

3. **Selected Lines:** The specific lines of code the engineer highlighted in their request.

4. **Current Model Diff:** The difference (in unified diff format) between the original code and the current, *undesired* output from the Code LLM.

5. **Golden Response Diff:** The difference (in unified diff format) between the original code and the *desired* (golden) output.

Your task is to analyze these inputs and generate a report in Markdown format, containing the following sections:

1. **Analyze Differences:** Carefully examine the *Current Model Diff* and the *Golden Response Diff* to understand the discrepancy between the current and desired outputs.

2. **Identify Missing Specification:** Determine what crucial information is *missing* from the original prompt that might be preventing the Code LLM from generating the desired output.

3. **Create Improved Prompt:** Construct a new prompt that is clear, specific, concise, and error-free.

4. **Request More Information (If Necessary):** If you cannot confidently infer the user's intention or create an improved prompt due to insufficient information, provide a clear request for additional context instead of the improved prompt. This request should also be concise.
)PROMPT";

const char* kAutoprompterV1 = R"PROMPT(You are an expert Prompt Engineer specializing in code editing prompts for a Code LLM. Your task is to help software engineers improve their prompts to achieve desired code modifications. You will receive the following inputs:

1. **Current Prompt:** The engineer's initial prompt to the Code LLM.

2. **Code Context:** The complete code snippet being edited.

3. **Selected Lines:** The specific lines of code the engineer highlighted in their request.

4. **Current Model Diff:** The difference (in unified diff format) between the original code and the current, *undesired* output from the Code LLM.

Your task is to analyze these inputs and generate feedback in Markdown format, containing the following sections:

1. **Identify Missing Specification:** Use the following rubric, analyze the user prompt against *each* code in the codebook. Ask yourself, "Does this prompt exhibit this type of missing information, that would prohibit the Code LLM from producing the desired output?"

{{rubric}}

2. **Generate Improved Prompts:** Suggest revised versions of the user prompt (each under 50 words) that address each of the identified weaknesses above. For each improved prompt, if inferrable, include the missing information to help the Code LLM make the desired change. Only suggest improved prompts for selected missing specifications, and do not suggest improved prompt if none were selected.

3. **Recommend the Best Prompt:** Evaluate the revised prompts and select the one you believe is most likely to elicit the desired code edit from the Code LLM. Explain your reasoning.

4. **Request More Information (If Necessary):** If you cannot confidently infer the user's intention or create an improved prompt due to insufficient information, provide a clear request for additional context instead of the improved prompt. This request should be concise and specifically address the missing information needed.
)PROMPT";

const char* kCodebookInductionV1 = R"PROMPT(You are an expert qualitative researcher studying how software engineers prompt a Code LLM for code edits. You will receive a numbered list of error analyses, each describing what information a developer's prompt was missing.

Carry out open coding over these analyses and construct a codebook of the distinct kinds of missing information you observe. Merge overlapping codes, keep each category crisp, and cover every analysis with at least one category.

Reply with a Markdown table with exactly two columns:

| Category | Description |
| --- | --- |

One row per category, and no additional prose before or after the table.
)PROMPT";

}  // namespace

PromptLibrary PromptLibrary::embedded() {
  PromptLibrary library;
  library.put(PromptAsset{"error_analysis", 1, kErrorAnalysisV1});
  library.put(PromptAsset{"autoprompter", 1, kAutoprompterV1});
  library.put(PromptAsset{"codebook_induction", 1, kCodebookInductionV1});
  return library;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  PromptLibrary library = embedded();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw IoError("prompt override path is not a directory: " + dir.string());

  static const std::regex kAssetFile(R"(^([A-Za-z0-9_-]+)\.v([0-9]+)\.txt$)");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch match;
    const std::string filename = entry.path().filename().string();
    if (!std::regex_match(filename, match, kAssetFile)) continue;
    library.put(PromptAsset{match[1].str(), std::stoi(match[2].str()),
                            read_file(entry.path())});
  }
  return library;
}

void PromptLibrary::put(PromptAsset asset) {
  if (asset.name.empty()) throw ValidationError("prompt asset needs a name");
  if (asset.version < 1) throw ValidationError("prompt asset versions start at 1");
  assets_[asset.name][asset.version] = std::move(asset);
}

const PromptAsset& PromptLibrary::get(const std::string& name, int version) const {
  auto by_name = assets_.find(name);
  if (by_name == assets_.end()) throw ValidationError("unknown prompt asset: " + name);
  auto by_version = by_name->second.find(version);
  if (by_version == by_name->second.end())
    throw ValidationError("prompt asset " + name + " has no version " + std::to_string(version));
  return by_version->second;
}

const PromptAsset& PromptLibrary::latest(const std::string& name) const {
  auto by_name = assets_.find(name);
  if (by_name == assets_.end() || by_name->second.empty())
    throw ValidationError("unknown prompt asset: " + name);
  return by_name->second.rbegin()->second;
}

std::vector<std::string> PromptLibrary::names() const {
  std::vector<std::string> out;
  out.reserve(assets_.size());
  for (const auto& entry : assets_) out.push_back(entry.first);
  return out;
}

std::string render_prompt(const std::string& text,
                          const std::map<std::string, std::string>& slots) {
  std::string out = text;
  for (const auto& [slot, value] : slots) {
    const std::string token = "{{" + slot + "}}";
    std::size_t at = 0;
    while ((at = out.find(token, at)) != std::string::npos) {
      out.replace(at, token.size(), value);
      at += value.size();
    }
  }
  std::size_t open = out.find("{{");
  if (open != std::string::npos) {
    std::size_t close = out.find("}}", open);
    std::string slot = close == std::string::npos ? out.substr(open)
                                                  : out.substr(open + 2, close - open - 2);
    throw ValidationError("prompt slot left unfilled: " + slot);
  }
  return out;
}

}  // namespace reprompt
