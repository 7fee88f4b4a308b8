#include "emotts/mos/survey.h"

#include <nlohmann/json.hpp>

#include <set>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"

namespace emotts::mos {

size_t SurveyDefinition::total() const {
  size_t n = 0;
  for (const auto& s : sections) n += s.stimuli.size();
  return n;
}

void SurveyDefinition::Validate() const {
  if (sections.empty() || total() == 0) throw Error(ErrorCode::kEmptySurvey, "survey has no stimuli");
  std::set<std::string> seen;
  for (const auto& section : sections) {
    if (section.emotion.empty()) throw Error(ErrorCode::kInvalidConfig, "section without emotion");
    for (const auto& st : section.stimuli) {
      if (st.utterance_id.empty()) throw Error(ErrorCode::kInvalidConfig, "stimulus without id");
      if (!seen.insert(st.utterance_id).second) {
        throw Error(ErrorCode::kInvalidConfig, "duplicate stimulus id " + st.utterance_id);
      }
      if (st.kind != "original" && st.kind != "synthesized") {
        throw Error(ErrorCode::kInvalidConfig, "unknown stimulus kind " + st.kind);
      }
    }
  }
}

SurveyDefinition SurveyDefinition::FromJson(const nlohmann::json& j,
                                            const std::filesystem::path& base_dir) {
  SurveyDefinition s;
  try {
    s.shuffle_within_section = j.value("shuffle_within_section", true);
    for (const auto& js : j.at("sections")) {
      Section section;
      section.emotion = js.at("emotion").get<std::string>();
      for (const auto& jt : js.at("stimuli")) {
        Stimulus st;
        st.utterance_id = jt.at("utterance_id").get<std::string>();
        std::filesystem::path wav = jt.at("wav").get<std::string>();
        st.wav_path = wav.is_absolute() || base_dir.empty() ? wav : base_dir / wav;
        st.kind = jt.value("kind", std::string("synthesized"));
        section.stimuli.push_back(std::move(st));
      }
      s.sections.push_back(std::move(section));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("survey: ") + e.what());
  }
  s.Validate();
  return s;
}

SurveyDefinition SurveyDefinition::Load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

}  // namespace emotts::mos
