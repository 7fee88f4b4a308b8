#ifndef EMOTTS_MOS_SURVEY_H_
#define EMOTTS_MOS_SURVEY_H_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace emotts::mos {

struct Stimulus {
  std::string utterance_id;
  std::filesystem::path wav_path;
  std::string kind = "synthesized";  // original | synthesized
};

struct Section {
  std::string emotion;
  std::vector<Stimulus> stimuli;
};

// JSON form:
//   {"shuffle_within_section": true,
//    "sections": [{"emotion": "amused",
//                  "stimuli": [{"utterance_id": "a1", "wav": "a1.wav", "kind": "original"}]}]}
// Relative wav paths resolve against the JSON file's directory.
struct SurveyDefinition {
  std::vector<Section> sections;
  bool shuffle_within_section = true;

  size_t total() const;
  // EmptySurvey when there is nothing to rate; InvalidConfig on duplicate ids
  // or unknown kinds.
  void Validate() const;

  static SurveyDefinition FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static SurveyDefinition Load(const std::filesystem::path& path);
};

}  // namespace emotts::mos

#endif  // EMOTTS_MOS_SURVEY_H_
