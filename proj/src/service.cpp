#include "cbo/service.hpp"

#include "cbo/json_io.hpp"

#include <httplib.h>

#include <cmath>
#include <sstream>
#include <thread>

namespace cbo {

using Json = nlohmann::json;

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json trial_json(const SessionTrial& t) {
    return Json{{"iteration", t.iteration},
                {"s", t.s},
                {"x", json::vector(t.x)},
                {"stimulus", {{"letter", std::string(1, t.letter)}, {"size_px", t.size_px}}}};
}

int http_status(SessionError::Kind k) {
    switch (k) {
        case SessionError::Kind::NotFound: return 404;
        case SessionError::Kind::BadRequest: return 400;
        case SessionError::Kind::Conflict: return 409;
        case SessionError::Kind::Closed: return 410;
    }
    return 500;
}

const char* error_code(SessionError::Kind k) {
    switch (k) {
        case SessionError::Kind::NotFound: return "not_found";
        case SessionError::Kind::BadRequest: return "bad_request";
        case SessionError::Kind::Conflict: return "conflict";
        case SessionError::Kind::Closed: return "closed";
    }
    return "internal";
}

void send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send(res, status, Json{{"code", code}, {"message", message}});
}

// Runs `f`, mapping exceptions onto error documents.
template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const SessionError& e) {
        send_error(res, http_status(e.kind()), error_code(e.kind()), e.what());
    } catch (const Json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const std::invalid_argument& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

Json parse_body(const std::string& body) {
    if (body.empty()) return Json::object();
    Json j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SessionError(SessionError::Kind::BadRequest, "body must be a JSON object");
    return j;
}

}  // namespace

SessionConfig session_config_from_json(const std::string& body) {
    const Json j = parse_body(body);
    SessionConfig c;
    try {
        c.rule = j.value("rule", c.rule);
        c.seed = j.value("seed", c.seed);
        c.iterations = j.value("iterations", c.iterations);
        c.initial_samples = j.value("initial_samples", c.initial_samples);
        c.calibration_px = j.value("calibration_px", c.calibration_px);
        if (j.contains("kernel")) c.kernel = json::to_kernel(j.at("kernel"));
        if (j.contains("patient") && !j.at("patient").is_null()) {
            const Json& p = j.at("patient");
            const std::string mode = p.value("mode", "simulated");
            if (mode == "simulated") {
                PatientModel m = simulated_patient(c.seed, p.value("slope", 5.0));
                if (p.contains("truth")) m.truth = json::to_vector(p.at("truth"));
                m.guess_rate = p.value("guess_rate", m.guess_rate);
                c.patient = m;
            } else if (mode != "live") {
                throw std::invalid_argument("patient mode must be simulated or live");
            }
        }
        validate(c);
    } catch (const SessionError&) {
        throw;
    } catch (const std::exception& e) {
        throw SessionError(SessionError::Kind::BadRequest, e.what());
    }
    return c;
}

SessionService::SessionService(SessionManager& manager)
    : manager_(manager), server_(std::make_unique<httplib::Server>()) {
    routes();
}

SessionService::~SessionService() { stop(); }

void SessionService::routes() {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send(res, 200, Json{{"status", "ok"}}); });

    s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto session = manager_.create(session_config_from_json(req.body));
            send(res, 201, Json{{"id", session->id()}, {"status", to_string(session->status())}});
        });
    });

    s.Get(R"(/sessions/([^/]+)/trial)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send(res, 200, trial_json(manager_.get(req.matches[1])->trial())); });
    });

    s.Post(R"(/sessions/([^/]+)/response)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto session = manager_.get(req.matches[1]);
            const Json body = parse_body(req.body);
            if (!body.contains("c") || !body.at("c").is_number_integer())
                throw SessionError(SessionError::Kind::BadRequest, "c must be 0 or 1");
            std::optional<int> index;
            if (body.contains("trial") && !body.at("trial").is_null()) index = body.at("trial").get<int>();
            const auto next = session->respond(body.at("c").get<int>(), index);
            Json out{{"done", !next.has_value()}, {"iteration", session->iteration()}};
            if (next) out["trial"] = trial_json(*next);
            send(res, 200, out);
        });
    });

    s.Get(R"(/sessions/([^/]+)/estimate)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto session = manager_.get(req.matches[1]);
            const SessionEstimate e = session->estimate();
            Json curve = Json::array();
            for (const auto& p : e.va_curve) curve.push_back(Json{{"iter", p.iteration}, {"va", finite_or_null(p.va)}});
            send(res, 200,
                 Json{{"iteration", e.iteration},
                      {"x_hat", e.x_hat ? json::vector(*e.x_hat) : Json(nullptr)},
                      {"predicted_va", finite_or_null(e.predicted_va)},
                      {"true_va", e.true_va ? Json(*e.true_va) : Json(nullptr)},
                      {"va_curve", curve},
                      {"status", to_string(session->status())}});
        });
    });

    s.Get(R"(/sessions/([^/]+)/trace)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::ostringstream out;
            write_trace(out, manager_.get(req.matches[1])->trace());
            res.set_content(out.str(), "application/x-ndjson");
        });
    });

    s.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            manager_.close(id);
            send(res, 200, Json{{"id", id}, {"status", "closed"}});
        });
    });
}

bool SessionService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int SessionService::start_background(const std::string& host) {
    const int port = server_->bind_to_any_port(host);
    if (port < 0) throw std::runtime_error("cannot bind " + host);
    thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void SessionService::stop() {
    if (server_) server_->stop();
    if (thread_ && thread_->joinable()) thread_->join();
    thread_.reset();
}

}  // namespace cbo
