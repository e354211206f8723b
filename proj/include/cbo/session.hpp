#pragma once

#include "cbo/psychophysics.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbo {

struct SessionConfig {
    std::string rule = "ucb-ald";
    std::uint64_t seed = 0;
    int iterations = 260;
    int initial_samples = 5;
    /// Known observer for simulated sessions; absent for a live observer.
    std::optional<PatientModel> patient;
    /// Letter height in pixels at s = 0; the height at s is calibration * 10^s.
    double calibration_px = 20.0;
    /// Surrogate kernel; the manager's default when absent.
    std::optional<KernelSpec> kernel;
};

void validate(const SessionConfig& config);

enum class SessionStatus { Active, Done, Closed };
std::string to_string(SessionStatus status);

struct SessionTrial {
    int iteration = 0;
    double s = 0.0;
    Vector x;
    char letter = 'A';
    double size_px = 0.0;
};

struct EstimatePoint {
    int iteration = 0;
    double va = 0.0;  ///< true VA of the estimate for simulated observers, else the surrogate's prediction
};

struct SessionEstimate {
    int iteration = 0;  ///< responses received
    std::optional<Vector> x_hat;
    double predicted_va = 0.0;  ///< NaN before the first response
    std::optional<double> true_va;
    std::vector<EstimatePoint> va_curve;
};

class SessionError : public std::runtime_error {
public:
    enum class Kind { NotFound, BadRequest, Conflict, Closed };
    SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// One adaptive acuity session. Every operation takes the session lock, so
/// calls on one session are serialized.
class Session {
public:
    Session(std::string id, const SessionConfig& config, const KernelSpec& kernel);

    const std::string& id() const { return id_; }
    SessionStatus status() const;
    int iteration() const;

    /// Outstanding trial; repeated calls return the same trial. Throws Closed
    /// after close() and Conflict once all iterations are answered.
    SessionTrial trial();
    /// Answers the outstanding trial. When `trial_index` is given it must name
    /// that trial, so a repeated submission is rejected and changes nothing.
    /// Returns the next trial, or nothing when the session is done.
    std::optional<SessionTrial> respond(int outcome, std::optional<int> trial_index = std::nullopt);
    SessionEstimate estimate() const;
    void close();
    Trace trace() const;

private:
    SessionTrial current_trial_locked();

    std::string id_;
    SessionConfig config_;
    std::unique_ptr<PsychophysicsOracle> oracle_;
    std::unique_ptr<OptimizationLoop> loop_;
    std::vector<double> predicted_;
    bool closed_ = false;
    mutable std::mutex mutex_;
};

/// Registry of sessions. Lookups take a short global lock; session work runs
/// under the session's own lock.
class SessionManager {
public:
    explicit SessionManager(KernelSpec default_kernel);

    std::shared_ptr<Session> create(const SessionConfig& config);
    std::shared_ptr<Session> get(const std::string& id) const;
    /// Closes the session; it stays registered so later calls report it closed.
    void close(const std::string& id);
    std::size_t size() const;
    const KernelSpec& default_kernel() const { return default_kernel_; }

private:
    KernelSpec default_kernel_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_ = 1;
    mutable std::mutex mutex_;
};

}  // namespace cbo
