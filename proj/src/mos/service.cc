#include "emotts/mos/service.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <random>

#include "emotts/common/error.h"
#include "emotts/common/random.h"

namespace emotts::mos {
using nlohmann::json;

namespace {

double NowSeconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

json ToJson(const eval::RatingRecord& r) {
  return {{"type", "rating"},        {"session_id", r.session_id}, {"listener_id", r.listener_id},
          {"utterance_id", r.utterance_id}, {"emotion", r.emotion},  {"kind", r.kind},
          {"score", r.score},        {"timestamp", r.timestamp}};
}

}  // namespace

MosService::MosService(SurveyDefinition survey, std::unique_ptr<RecordStore> store,
                       ServiceOptions options)
    : survey_(std::move(survey)), store_(std::move(store)), options_(std::move(options)) {
  survey_.Validate();
  if (!options_.clock) options_.clock = NowSeconds;
  for (const auto& section : survey_.sections) {
    for (const auto& st : section.stimuli) stimuli_[st.utterance_id] = {&st, section.emotion};
  }
  id_salt_ = std::random_device{}();
  id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
  Replay();
}

void MosService::Replay() {
  for (const json& rec : store_->ReadAll()) {
    const std::string type = rec.value("type", "");
    if (type == "session") {
      Session s;
      s.listener_id = rec.value("listener_id", "");
      s.order = rec.value("order", std::vector<std::string>{});
      sessions_[rec.value("session_id", "")] = std::move(s);
    } else if (type == "rating") {
      eval::RatingRecord r;
      r.session_id = rec.value("session_id", "");
      r.listener_id = rec.value("listener_id", "");
      r.utterance_id = rec.value("utterance_id", "");
      r.emotion = rec.value("emotion", "");
      r.kind = rec.value("kind", "");
      r.score = rec.value("score", 0.0);
      r.timestamp = rec.value("timestamp", 0.0);
      auto it = sessions_.find(r.session_id);
      if (it == sessions_.end() || !it->second.rated.insert(r.utterance_id).second) {
        spdlog::warn("store: ignoring orphan or repeated rating {}/{}", r.session_id,
                     r.utterance_id);
        continue;
      }
      ratings_.push_back(std::move(r));
    }
  }
  id_counter_ = sessions_.size();
}

std::vector<std::string> MosService::BuildOrder(uint64_t seed) const {
  std::vector<std::string> order;
  for (size_t i = 0; i < survey_.sections.size(); ++i) {
    std::vector<std::string> ids;
    for (const auto& st : survey_.sections[i].stimuli) ids.push_back(st.utterance_id);
    if (survey_.shuffle_within_section) {
      Rng rng(MixSeed(seed, i));
      rng.Shuffle(ids);
    }
    order.insert(order.end(), ids.begin(), ids.end());
  }
  return order;
}

std::string MosService::NewSessionId() {
  for (;;) {
    std::string id = fmt::format("s{:016x}", MixSeed(id_salt_, id_counter_++));
    if (!sessions_.count(id)) return id;
  }
}

SessionInfo MosService::CreateSession(const std::string& listener_id,
                                      std::optional<uint64_t> seed) {
  std::lock_guard lock(mu_);
  const std::string id = NewSessionId();
  Session s;
  s.listener_id = listener_id;
  s.order = BuildOrder(seed.value_or(MixSeed(id_salt_, id_counter_)));
  store_->Append({{"type", "session"},
                  {"session_id", id},
                  {"listener_id", listener_id},
                  {"order", s.order},
                  {"timestamp", options_.clock()}});
  const size_t total = s.order.size();
  sessions_[id] = std::move(s);
  return {id, total};
}

std::optional<StimulusView> MosService::NextStimulus(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, session_id);
  const Session& s = it->second;
  for (size_t i = 0; i < s.order.size(); ++i) {
    if (s.rated.count(s.order[i])) continue;
    StimulusView v;
    v.utterance_id = s.order[i];
    const auto st = stimuli_.find(v.utterance_id);
    v.emotion = st == stimuli_.end() ? "" : st->second.emotion;
    v.audio_url = "/audio/" + v.utterance_id;
    v.index = i;
    v.total = s.order.size();
    return v;
  }
  return std::nullopt;
}

eval::RatingRecord MosService::SubmitRating(const std::string& session_id,
                                            const std::string& utterance_id, double score) {
  if (!eval::IsValidScore(score, options_.allow_half_points)) {
    throw Error(ErrorCode::kInvalidScore, fmt::format("score {} is not allowed", score));
  }
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, session_id);
  Session& s = it->second;
  if (std::find(s.order.begin(), s.order.end(), utterance_id) == s.order.end()) {
    throw Error(ErrorCode::kUnknownStimulus, utterance_id + " is not part of this session");
  }
  if (s.rated.count(utterance_id)) {
    throw Error(ErrorCode::kDuplicateRating, utterance_id + " already rated in " + session_id);
  }
  eval::RatingRecord r;
  r.session_id = session_id;
  r.listener_id = s.listener_id;
  r.utterance_id = utterance_id;
  const auto st = stimuli_.find(utterance_id);
  if (st != stimuli_.end()) {
    r.emotion = st->second.emotion;
    r.kind = st->second.stimulus->kind;
  }
  r.score = score;
  r.timestamp = options_.clock();
  store_->Append(ToJson(r));
  s.rated.insert(utterance_id);
  ratings_.push_back(r);
  return r;
}

std::vector<eval::RatingRecord> MosService::Export(const std::string& kind) const {
  std::vector<eval::RatingRecord> out;
  {
    std::lock_guard lock(mu_);
    for (const auto& r : ratings_) {
      if (kind.empty() || r.kind == kind) out.push_back(r);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.session_id, a.utterance_id) <
           std::tie(b.timestamp, b.session_id, b.utterance_id);
  });
  return out;
}

eval::MosStats MosService::Report() const {
  return eval::MosReport(Export(), eval::CiMethod::kNormal, options_.allow_half_points);
}

std::vector<std::string> MosService::SessionOrder(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, session_id);
  return it->second.order;
}

const Stimulus* MosService::FindStimulus(const std::string& utterance_id) const {
  const auto it = stimuli_.find(utterance_id);
  return it == stimuli_.end() ? nullptr : it->second.stimulus;
}

}  // namespace emotts::mos
