#include "emotts/mos/server.h"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include "emotts/common/error.h"
#include "emotts/common/kv_file.h"
#include "emotts/mos/service.h"

namespace emotts::mos {
using nlohmann::json;

namespace {

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownStimulus:
    case ErrorCode::kMissingFile:
      return 404;
    case ErrorCode::kDuplicateRating:
      return 409;
    default:
      return 400;
  }
}

void SendJson(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& message) {
  SendJson(res, {{"error", std::string(ErrorCodeName(code))}, {"message", message}},
           StatusFor(code));
}

json ParseBody(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "request body must be an object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed JSON: ") + e.what());
  }
}

// Wraps a handler so library errors become JSON error responses.
template <typename Fn>
httplib::Server::Handler Guard(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      SendError(res, e.code(), e.what());
    } catch (const json::exception& e) {
      SendError(res, ErrorCode::kInvalidConfig, e.what());
    }
  };
}

}  // namespace

void RegisterRoutes(httplib::Server& server, MosService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", Guard([&service](const httplib::Request& req, httplib::Response& res) {
    const json body = req.body.empty() ? json::object() : ParseBody(req);
    const std::string listener = body.value("listener_id", "");
    if (listener.empty()) throw Error(ErrorCode::kInvalidConfig, "listener_id is required");
    std::optional<uint64_t> seed;
    if (body.contains("seed")) seed = body.at("seed").get<uint64_t>();
    const SessionInfo info = service.CreateSession(listener, seed);
    SendJson(res, {{"session_id", info.session_id}, {"total", info.total}}, 201);
  }));

  server.Get(R"(/sessions/([^/]+)/next)",
             Guard([&service](const httplib::Request& req, httplib::Response& res) {
               const auto next = service.NextStimulus(req.matches[1]);
               if (!next) {
                 SendJson(res, {{"done", true}});
                 return;
               }
               SendJson(res, {{"utterance_id", next->utterance_id},
                              {"emotion", next->emotion},
                              {"audio_url", next->audio_url},
                              {"index", next->index},
                              {"total", next->total}});
             }));

  server.Post(R"(/sessions/([^/]+)/ratings)",
              Guard([&service](const httplib::Request& req, httplib::Response& res) {
                const json body = ParseBody(req);
                const std::string utt = body.value("utterance_id", "");
                if (!body.contains("score") || !body.at("score").is_number()) {
                  throw Error(ErrorCode::kInvalidScore, "score must be a number");
                }
                const auto r =
                    service.SubmitRating(req.matches[1], utt, body.at("score").get<double>());
                SendJson(res, {{"session_id", r.session_id},
                               {"utterance_id", r.utterance_id},
                               {"emotion", r.emotion},
                               {"kind", r.kind},
                               {"score", r.score},
                               {"timestamp", r.timestamp}},
                         201);
              }));

  server.Get("/export.csv", Guard([&service](const httplib::Request& req, httplib::Response& res) {
    const std::string kind = req.has_param("kind") ? req.get_param_value("kind") : "";
    res.set_content(eval::RatingsCsv(service.Export(kind)), "text/csv");
  }));

  server.Get("/report", Guard([&service](const httplib::Request&, httplib::Response& res) {
    json out = json::object();
    for (const auto& [emotion, s] : service.Report()) {
      out[emotion] = {{"mean", s.mean}, {"ci95", s.half_width}, {"n", s.n}};
    }
    SendJson(res, out);
  }));

  server.Get(R"(/audio/([^/]+))", Guard([&service](const httplib::Request& req,
                                                   httplib::Response& res) {
    const Stimulus* st = service.FindStimulus(req.matches[1]);
    if (!st) throw Error(ErrorCode::kUnknownStimulus, req.matches[1]);
    res.set_content(ReadFile(st->wav_path), "audio/wav");
  }));
}

bool Serve(MosService& service, const std::string& host, int port) {
  httplib::Server server;
  RegisterRoutes(server, service);
  spdlog::info("MOS service listening on {}:{}", host, port);
  return server.listen(host, port);
}

}  // namespace emotts::mos
