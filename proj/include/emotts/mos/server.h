#ifndef EMOTTS_MOS_SERVER_H_
#define EMOTTS_MOS_SERVER_H_

#include <string>

namespace httplib {
class Server;
}

namespace emotts::mos {

class MosService;

// Routes:
//   POST /sessions                 {listener_id[, seed]} -> {session_id, total}
//   GET  /sessions/{id}/next       -> {utterance_id, emotion, audio_url, index, total} | {done: true}
//   POST /sessions/{id}/ratings    {utterance_id, score} -> the stored record
//   GET  /export.csv[?kind=...]
//   GET  /report                   -> {emotion: {mean, ci95, n}}
//   GET  /audio/{utterance_id}     -> audio/wav
// Errors answer {"error": <name>, "message": ...} with 400/404/409.
void RegisterRoutes(httplib::Server& server, MosService& service);

// Blocks until the server stops. Returns false if the port could not be bound.
bool Serve(MosService& service, const std::string& host, int port);

}  // namespace emotts::mos

#endif  // EMOTTS_MOS_SERVER_H_
