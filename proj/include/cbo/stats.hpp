#pragma once

#include "cbo/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cbo {

/// Alternative hypothesis: a tends to exceed b, falls below b, or differs.
enum class Side { Greater, Less, TwoSided };

enum class MannWhitneyMethod { Auto, Exact, Normal };

struct MannWhitneyResult {
    double u = 0.0;  ///< pairs with a > b plus half the ties
    double p = 1.0;
    bool exact = false;
};

/// Auto uses the exact permutation distribution (ties kept at midranks) when
/// min(n, m) <= 8 and n + m <= 16, else the normal approximation with tie and
/// continuity corrections. Throws std::invalid_argument on empty samples.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b, Side side,
                                 MannWhitneyMethod method = MannWhitneyMethod::Auto);

/// Rectangle-rule area under the per-iteration objective of the inferred optimum.
double auc(const Trace& trace);
double auc_trapezoid(const Trace& trace);

/// What the ranking needs from one run.
struct RunSummary {
    std::string benchmark;
    std::string rule;
    std::uint64_t seed = 0;
    double final_best = 0.0;  ///< best objective over the inferred optima
    double auc = 0.0;
};

RunSummary summarize(const Trace& trace);

struct BenchmarkRanking {
    std::vector<std::string> rules;  ///< sorted
    /// wins[i][j] = 1 when rules[i] beats rules[j] at alpha (one-sided, row beats column).
    std::vector<std::vector<int>> final_wins;
    std::vector<std::vector<int>> auc_wins;
    std::vector<std::vector<double>> final_p;
    std::vector<std::vector<double>> auc_p;
    std::map<std::string, int> borda;
};

struct StatsReport {
    double alpha = 0.0;
    std::map<std::string, BenchmarkRanking> benchmarks;
    std::map<std::string, int> aggregate;
    /// Rules by decreasing aggregate Borda, then by name.
    std::vector<std::string> ranking;
};

/// Per benchmark: one-sided Mann-Whitney tests on the final best value give
/// win counts; rules tied on wins are re-tested on AUC among themselves, and
/// the merged order (wins, then AUC wins) ranks them. A rule's Borda score is
/// the number of rules strictly below it; scores add across benchmarks.
/// Throws std::invalid_argument when replicate counts differ within a benchmark.
StatsReport stratified_ranking(const std::vector<RunSummary>& runs, double alpha);

inline constexpr int kReportVersion = 1;

void write_report(std::ostream& out, const StatsReport& report);
StatsReport read_report(std::istream& in);

/// Summaries of every *.jsonl trace under `dir`; invalid traces are rejected.
std::vector<RunSummary> load_summaries(const std::filesystem::path& dir);

}  // namespace cbo
