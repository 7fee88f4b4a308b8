#ifndef EMOTTS_MOS_SERVICE_H_
#define EMOTTS_MOS_SERVICE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emotts/eval/stats.h"
#include "emotts/mos/store.h"
#include "emotts/mos/survey.h"

namespace emotts::mos {

struct SessionInfo {
  std::string session_id;
  size_t total = 0;
};

struct StimulusView {
  std::string utterance_id;
  std::string emotion;
  std::string audio_url;
  size_t index = 0;
  size_t total = 0;
};

struct ServiceOptions {
  bool allow_half_points = false;
  // UTC seconds; replaceable for tests.
  std::function<double()> clock;
};

// Survey sessions and ratings. State is rebuilt from the store on
// construction, so acknowledged ratings survive restarts. All methods are
// thread-safe.
class MosService {
 public:
  MosService(SurveyDefinition survey, std::unique_ptr<RecordStore> store,
             ServiceOptions options = {});

  // Stimulus order is fixed per session: sections in definition order,
  // shuffled within sections (when enabled) by `seed`.
  SessionInfo CreateSession(const std::string& listener_id, std::optional<uint64_t> seed = {});

  // First unrated stimulus in session order, or nullopt when done.
  // Throws UnknownSession.
  std::optional<StimulusView> NextStimulus(const std::string& session_id) const;

  // The record is durable before this returns. Throws UnknownSession,
  // UnknownStimulus, DuplicateRating, InvalidScore.
  eval::RatingRecord SubmitRating(const std::string& session_id, const std::string& utterance_id,
                                  double score);

  // Ordered by (timestamp, session, utterance); `kind` empty means all.
  std::vector<eval::RatingRecord> Export(const std::string& kind = "") const;
  eval::MosStats Report() const;

  std::vector<std::string> SessionOrder(const std::string& session_id) const;
  const Stimulus* FindStimulus(const std::string& utterance_id) const;
  const SurveyDefinition& survey() const { return survey_; }

 private:
  struct Session {
    std::string listener_id;
    std::vector<std::string> order;
    std::set<std::string> rated;
  };
  struct StimulusRef {
    const Stimulus* stimulus;
    std::string emotion;
  };

  std::vector<std::string> BuildOrder(uint64_t seed) const;
  void Replay();
  std::string NewSessionId();

  SurveyDefinition survey_;
  std::unique_ptr<RecordStore> store_;
  ServiceOptions options_;
  std::map<std::string, StimulusRef> stimuli_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
  std::vector<eval::RatingRecord> ratings_;
  uint64_t id_counter_ = 0;
  uint64_t id_salt_ = 0;
};

}  // namespace emotts::mos

#endif  // EMOTTS_MOS_SERVICE_H_
