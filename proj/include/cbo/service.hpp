#pragma once

#include "cbo/session.hpp"

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace cbo {

/// HTTP+JSON front of a SessionManager.
///
///   POST   /sessions               config -> {id, status}
///   GET    /sessions/{id}/trial    -> {iteration, s, x: [S, C], stimulus: {letter, size_px}}
///   POST   /sessions/{id}/response {c: 0|1, trial?} -> {done, trial?}
///   GET    /sessions/{id}/estimate -> {iteration, x_hat, predicted_va, true_va, va_curve: [{iter, va}], status}
///   GET    /sessions/{id}/trace    -> trace lines
///   DELETE /sessions/{id}          -> {id, status}
///
/// Errors are {code, message} with 400, 404, 409 or 410.
class SessionService {
public:
    explicit SessionService(SessionManager& manager);
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Binds and serves until stop(); returns false when binding fails.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port, serves on a background thread, returns the port.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

private:
    void routes();

    SessionManager& manager_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<std::thread> thread_;
};

/// Parses a POST /sessions body. Throws SessionError(BadRequest).
SessionConfig session_config_from_json(const std::string& body);

}  // namespace cbo
