#include "cbo/session.hpp"

#include <cmath>

namespace cbo {

void validate(const SessionConfig& c) {
    if (c.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (c.initial_samples < 0) throw std::invalid_argument("initial samples must be non-negative");
    if (!(c.calibration_px > 0.0) || !std::isfinite(c.calibration_px))
        throw std::invalid_argument("calibration must be positive");
    if (c.patient) validate(*c.patient);
    if (rule_is_preferential(c.rule)) throw std::invalid_argument(c.rule + " queries duels");
}

std::string to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Active: return "active";
        case SessionStatus::Done: return "done";
        case SessionStatus::Closed: return "closed";
    }
    return "unknown";
}

Session::Session(std::string id, const SessionConfig& config, const KernelSpec& kernel)
    : id_(std::move(id)), config_(config) {
    try {
        validate(config_);
        oracle_ = std::make_unique<PsychophysicsOracle>(config_.patient, patient_response_stream(config_.seed));
        RunConfig rc = va_run_config(config_.rule, config_.seed, config_.kernel.value_or(kernel), config_.iterations);
        rc.initial_samples = config_.initial_samples;
        loop_ = std::make_unique<OptimizationLoop>(rc, *oracle_);
    } catch (const std::invalid_argument& e) {
        throw SessionError(SessionError::Kind::BadRequest, e.what());
    }
}

SessionStatus Session::status() const {
    std::lock_guard lock(mutex_);
    if (closed_) return SessionStatus::Closed;
    return loop_->done() ? SessionStatus::Done : SessionStatus::Active;
}

int Session::iteration() const {
    std::lock_guard lock(mutex_);
    return loop_->iteration();
}

SessionTrial Session::current_trial_locked() {
    if (closed_) throw SessionError(SessionError::Kind::Closed, "session " + id_ + " is closed");
    if (!loop_->trace().valid) throw SessionError(SessionError::Kind::Conflict, loop_->trace().error);
    if (loop_->done()) throw SessionError(SessionError::Kind::Conflict, "session " + id_ + " is complete");
    const Decision* d = nullptr;
    try {
        d = &loop_->proposal();
    } catch (const std::exception& e) {
        throw SessionError(SessionError::Kind::Conflict, e.what());
    }
    SessionTrial t;
    t.iteration = loop_->iteration();
    t.s = d->s[0];
    t.x = d->x;
    RngStream letters(config_.seed, "letter", {static_cast<std::uint64_t>(t.iteration)});
    t.letter = static_cast<char>('A' + letters.integer(0, 25));
    t.size_px = config_.calibration_px * std::pow(10.0, t.s);
    return t;
}

SessionTrial Session::trial() {
    std::lock_guard lock(mutex_);
    return current_trial_locked();
}

std::optional<SessionTrial> Session::respond(int outcome, std::optional<int> trial_index) {
    std::lock_guard lock(mutex_);
    if (outcome != 0 && outcome != 1) throw SessionError(SessionError::Kind::BadRequest, "c must be 0 or 1");
    if (closed_) throw SessionError(SessionError::Kind::Closed, "session " + id_ + " is closed");
    if (loop_->done()) throw SessionError(SessionError::Kind::Conflict, "no outstanding trial");
    if (trial_index && *trial_index != loop_->iteration())
        throw SessionError(SessionError::Kind::Conflict, "trial " + std::to_string(*trial_index) +
                                                             " is not outstanding (current " +
                                                             std::to_string(loop_->iteration()) + ")");
    try {
        loop_->proposal();
        const TrialRecord& r = loop_->submit(outcome);
        predicted_.push_back(predicted_va(loop_->state(), r.x_hat));
    } catch (const std::exception& e) {
        throw SessionError(SessionError::Kind::Conflict, e.what());
    }
    if (loop_->done()) return std::nullopt;
    return current_trial_locked();
}

SessionEstimate Session::estimate() const {
    std::lock_guard lock(mutex_);
    SessionEstimate e;
    const auto& records = loop_->trace().records;
    e.iteration = static_cast<int>(records.size());
    e.predicted_va = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double va = records[i].secondary ? *records[i].secondary : predicted_[i];
        e.va_curve.push_back({records[i].iteration, va});
    }
    if (!records.empty()) {
        e.x_hat = records.back().x_hat;
        e.predicted_va = predicted_.back();
        e.true_va = records.back().secondary;
    }
    return e;
}

void Session::close() {
    std::lock_guard lock(mutex_);
    if (closed_) throw SessionError(SessionError::Kind::Closed, "session " + id_ + " is closed");
    closed_ = true;
}

Trace Session::trace() const {
    std::lock_guard lock(mutex_);
    return loop_->trace();
}

// ---------------------------------------------------------------------------

SessionManager::SessionManager(KernelSpec default_kernel) : default_kernel_(std::move(default_kernel)) {
    validate(default_kernel_);
}

std::shared_ptr<Session> SessionManager::create(const SessionConfig& config) {
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_++);
    }
    auto session = std::make_shared<Session>(id, config, default_kernel_);
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, session);
    return session;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw SessionError(SessionError::Kind::NotFound, "unknown session " + id);
    return it->second;
}

void SessionManager::close(const std::string& id) { get(id)->close(); }

std::size_t SessionManager::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

}  // namespace cbo
