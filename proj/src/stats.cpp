#include "cbo/stats.hpp"

#include "cbo/json_io.hpp"
#include "cbo/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cbo {

using Json = nlohmann::json;

namespace {

struct Pooled {
    std::vector<long> doubled_ranks;  ///< 2 x midrank of every pooled value, in input order (a then b)
    std::vector<long> tie_sizes;
};

Pooled pool(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t N = a.size() + b.size();
    std::vector<double> v(a);
    v.insert(v.end(), b.begin(), b.end());
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    Pooled out;
    out.doubled_ranks.assign(N, 0);
    for (std::size_t i = 0; i < N;) {
        std::size_t j = i;
        while (j + 1 < N && v[order[j + 1]] == v[order[i]]) ++j;
        // Ranks i+1 .. j+1 share the midrank (i + j + 2) / 2.
        for (std::size_t k = i; k <= j; ++k) out.doubled_ranks[order[k]] = static_cast<long>(i + j + 2);
        out.tie_sizes.push_back(static_cast<long>(j - i + 1));
        i = j + 1;
    }
    return out;
}

// Upper and lower tail probabilities of the doubled rank sum of a random
// size-n subset of the pooled ranks.
std::pair<double, double> exact_tails(const std::vector<long>& ranks, std::size_t n, long observed) {
    const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
    // counts[k][w]: subsets of size k among the ranks seen so far with doubled sum w.
    std::vector<std::vector<double>> counts(n + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    counts[0][0] = 1.0;
    for (long r : ranks)
        for (std::size_t k = n; k >= 1; --k)
            for (long w = total; w >= r; --w) counts[k][static_cast<std::size_t>(w)] += counts[k - 1][static_cast<std::size_t>(w - r)];
    double all = 0.0, upper = 0.0, lower = 0.0;
    for (long w = 0; w <= total; ++w) {
        const double c = counts[n][static_cast<std::size_t>(w)];
        all += c;
        if (w >= observed) upper += c;
        if (w <= observed) lower += c;
    }
    return {upper / all, lower / all};
}

}  // namespace

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b, Side side,
                                 MannWhitneyMethod method) {
    if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney needs two nonempty samples");
    for (double v : a)
        if (std::isnan(v)) throw std::invalid_argument("Mann-Whitney sample contains NaN");
    for (double v : b)
        if (std::isnan(v)) throw std::invalid_argument("Mann-Whitney sample contains NaN");
    const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size()), N = n + m;
    const Pooled p = pool(a, b);
    const long w2 = std::accumulate(p.doubled_ranks.begin(), p.doubled_ranks.begin() + static_cast<long>(a.size()), 0L);

    MannWhitneyResult r;
    r.u = 0.5 * static_cast<double>(w2) - n * (n + 1.0) / 2.0;

    const bool exact = method == MannWhitneyMethod::Exact ||
                       (method == MannWhitneyMethod::Auto && std::min(a.size(), b.size()) <= 8 && a.size() + b.size() <= 16);
    if (exact) {
        r.exact = true;
        const auto [upper, lower] = exact_tails(p.doubled_ranks, a.size(), w2);
        switch (side) {
            case Side::Greater: r.p = upper; break;
            case Side::Less: r.p = lower; break;
            case Side::TwoSided: r.p = std::min(1.0, 2.0 * std::min(upper, lower)); break;
        }
        return r;
    }

    double ties = 0.0;
    for (long t : p.tie_sizes) ties += static_cast<double>(t * t * t - t);
    const double var = n * m / 12.0 * ((N + 1.0) - ties / (N * (N - 1.0)));
    const double mu = n * m / 2.0;
    if (!(var > 0.0)) {
        r.p = 1.0;
        return r;
    }
    const double sd = std::sqrt(var);
    switch (side) {
        case Side::Greater: r.p = normal_cdf(-(r.u - mu - 0.5) / sd); break;
        case Side::Less: r.p = normal_cdf((r.u - mu + 0.5) / sd); break;
        case Side::TwoSided: r.p = std::min(1.0, 2.0 * normal_cdf(-(std::abs(r.u - mu) - 0.5) / sd)); break;
    }
    return r;
}

double auc(const Trace& trace) {
    double s = 0.0;
    for (const auto& r : trace.records) s += r.g_hat;
    return s;
}

double auc_trapezoid(const Trace& trace) {
    const auto& rs = trace.records;
    double s = 0.0;
    for (std::size_t i = 1; i < rs.size(); ++i) s += 0.5 * (rs[i - 1].g_hat + rs[i].g_hat);
    return s;
}

RunSummary summarize(const Trace& trace) {
    if (!trace.valid) throw std::invalid_argument("invalid trace: " + trace.error);
    return {trace.config.benchmark, trace.config.rule, trace.config.seed, trace.best_value(), auc(trace)};
}

// ---------------------------------------------------------------------------

StatsReport stratified_ranking(const std::vector<RunSummary>& runs, double alpha) {
    StatsReport report;
    report.alpha = alpha;
    std::map<std::string, std::map<std::string, std::vector<const RunSummary*>>> grouped;
    std::set<std::string> all_rules;
    for (const auto& r : runs) {
        grouped[r.benchmark][r.rule].push_back(&r);
        all_rules.insert(r.rule);
    }

    for (const auto& [bench, by_rule] : grouped) {
        BenchmarkRanking br;
        std::size_t reps = 0;
        for (const auto& [rule, rs] : by_rule) {
            if (reps != 0 && rs.size() != reps)
                throw std::invalid_argument("unequal replicate counts on " + bench + " (" + rule + ")");
            reps = rs.size();
            br.rules.push_back(rule);
        }
        const std::size_t k = br.rules.size();
        std::vector<std::vector<double>> finals(k), aucs(k);
        for (std::size_t i = 0; i < k; ++i)
            for (const auto* r : by_rule.at(br.rules[i])) {
                finals[i].push_back(r->final_best);
                aucs[i].push_back(r->auc);
            }

        br.final_wins.assign(k, std::vector<int>(k, 0));
        br.auc_wins.assign(k, std::vector<int>(k, 0));
        br.final_p.assign(k, std::vector<double>(k, 1.0));
        br.auc_p.assign(k, std::vector<double>(k, 1.0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j) continue;
                br.final_p[i][j] = mann_whitney_u(finals[i], finals[j], Side::Greater).p;
                br.auc_p[i][j] = mann_whitney_u(aucs[i], aucs[j], Side::Greater).p;
                br.final_wins[i][j] = br.final_p[i][j] < alpha ? 1 : 0;
                br.auc_wins[i][j] = br.auc_p[i][j] < alpha ? 1 : 0;
            }

        std::vector<std::pair<int, int>> key(k);
        for (std::size_t i = 0; i < k; ++i)
            key[i].first = std::accumulate(br.final_wins[i].begin(), br.final_wins[i].end(), 0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (key[i].first == key[j].first) key[i].second += br.auc_wins[i][j];
        for (std::size_t i = 0; i < k; ++i) {
            int below = 0;
            for (std::size_t j = 0; j < k; ++j) below += key[j] < key[i] ? 1 : 0;
            br.borda[br.rules[i]] = below;
            report.aggregate[br.rules[i]] += below;
        }
        report.benchmarks.emplace(bench, std::move(br));
    }
    for (const auto& r : all_rules) report.aggregate.try_emplace(r, 0);
    for (const auto& [rule, _] : report.aggregate) report.ranking.push_back(rule);
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](const auto& x, const auto& y) {
        return report.aggregate.at(x) > report.aggregate.at(y);
    });
    return report;
}

// ---------------------------------------------------------------------------

namespace {

Json matrix_json(const std::vector<std::vector<double>>& m) {
    Json out = Json::array();
    for (const auto& row : m) {
        Json r = Json::array();
        for (double v : row) r.push_back(json::number(v));
        out.push_back(r);
    }
    return out;
}

std::vector<std::vector<double>> matrix_from_json(const Json& j) {
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
        out.emplace_back();
        for (const auto& v : row) out.back().push_back(json::to_number(v));
    }
    return out;
}

}  // namespace

void write_report(std::ostream& out, const StatsReport& report) {
    Json j{{"schema", "cbo-report"}, {"version", kReportVersion}, {"alpha", json::number(report.alpha)}};
    j["benchmarks"] = Json::object();
    for (const auto& [name, br] : report.benchmarks) {
        j["benchmarks"][name] = Json{{"rules", br.rules},
                                     {"final_wins", br.final_wins},
                                     {"auc_wins", br.auc_wins},
                                     {"final_p", matrix_json(br.final_p)},
                                     {"auc_p", matrix_json(br.auc_p)},
                                     {"borda", br.borda}};
    }
    j["aggregate"] = report.aggregate;
    j["ranking"] = report.ranking;
    out << j.dump(2) << '\n';
}

StatsReport read_report(std::istream& in) {
    const Json j = Json::parse(in);
    if (j.value("schema", "") != "cbo-report") throw std::invalid_argument("not a cbo report");
    if (j.at("version").get<int>() != kReportVersion)
        throw std::invalid_argument("unsupported report version " + j.at("version").dump());
    StatsReport r;
    r.alpha = json::to_number(j.at("alpha"));
    for (const auto& [name, b] : j.at("benchmarks").items()) {
        BenchmarkRanking br;
        br.rules = b.at("rules").get<std::vector<std::string>>();
        br.final_wins = b.at("final_wins").get<std::vector<std::vector<int>>>();
        br.auc_wins = b.at("auc_wins").get<std::vector<std::vector<int>>>();
        br.final_p = matrix_from_json(b.at("final_p"));
        br.auc_p = matrix_from_json(b.at("auc_p"));
        br.borda = b.at("borda").get<std::map<std::string, int>>();
        r.benchmarks.emplace(name, std::move(br));
    }
    r.aggregate = j.at("aggregate").get<std::map<std::string, int>>();
    r.ranking = j.at("ranking").get<std::vector<std::string>>();
    return r;
}

std::vector<RunSummary> load_summaries(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<RunSummary> out;
    for (const auto& f : files) {
        try {
            out.push_back(summarize(load_trace(f)));
        } catch (const TraceFormatError& e) {
            throw TraceFormatError(f.string() + ": " + e.what(), e.line());
        } catch (const std::exception& e) {
            throw std::runtime_error(f.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace cbo
