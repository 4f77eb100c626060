#include "rkbug/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <tuple>

namespace rkbug {

double effective_h_ref(const StudyConfig& cfg)
{
    if (cfg.h_ref > 0.0)
        return cfg.h_ref;
    if (cfg.h_values.empty())
        throw ConfigError("no step sizes given");
    return *std::min_element(cfg.h_values.begin(), cfg.h_values.end()) / 10.0;
}

ButcherTableau lookup_tableau(const StudyConfig& cfg, const std::string& name)
{
    for (const auto& t : cfg.custom_tableaux)
        if (t.name == name)
            return t;
    return registry_get(name);
}

void validate_config(const StudyConfig& cfg)
{
    const auto& p = cfg.problem;
    if (p.n < 4)
        throw ConfigError("problem size n must be at least 4");
    if (!(p.t_final > 0.0))
        throw ConfigError("t_final must be positive");
    if (!std::isfinite(p.theta) || p.theta < 0.0)
        throw ConfigError("theta must be finite and nonnegative");
    if (cfg.methods.empty())
        throw ConfigError("empty method list");
    if (cfg.h_values.empty())
        throw ConfigError("empty h_values");
    if (cfg.r_values.empty())
        throw ConfigError("empty r_values");
    if (cfg.jobs < 1)
        throw ConfigError("jobs must be at least 1");

    for (const auto& t : cfg.custom_tableaux) {
        const auto issues = validate(t);
        if (!issues.empty())
            throw ConfigError("invalid tableau '" + t.name + "': " + issues.front());
    }
    for (const auto& m : cfg.methods)
        lookup_tableau(cfg, m.tableau);

    for (std::size_t i = 0; i < cfg.h_values.size(); ++i) {
        if (!(cfg.h_values[i] > 0.0))
            throw ConfigError("step sizes must be positive");
        if (i > 0 && !(cfg.h_values[i] < cfg.h_values[i - 1]))
            throw ConfigError("h_values must be strictly decreasing");
        step_count(0.0, p.t_final, cfg.h_values[i]);
    }
    for (std::size_t i = 0; i < cfg.r_values.size(); ++i) {
        if (cfg.r_values[i] < 1 || cfg.r_values[i] > p.n)
            throw ConfigError("ranks must lie in [1, n]");
        if (i > 0 && !(cfg.r_values[i] > cfg.r_values[i - 1]))
            throw ConfigError("r_values must be strictly increasing");
    }

    const double h_ref = effective_h_ref(cfg);
    const double h_min = *std::min_element(cfg.h_values.begin(), cfg.h_values.end());
    if (h_ref > h_min / 2.0 * (1.0 + 1e-12))
        throw ConfigError("h_ref must be at most min(h_values) / 2");
    for (double h : cfg.h_values) {
        try {
            step_count(0.0, h, h_ref);
        } catch (const ConfigError&) {
            throw ConfigError("non-integer step count: h_ref must divide every step size");
        }
    }
}

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double lsq_slope(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::string fmt17(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

OrderEstimate estimate_order(std::span<const double> h, std::span<const double> error, const Heuristics& heur)
{
    if (h.size() != error.size())
        throw std::invalid_argument("estimate_order: h and error differ in length");

    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] > 0.0 && std::isfinite(error[i]) && error[i] > 0.0)
            pts.emplace_back(h[i], error[i]);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
              pts.end());
    if (pts.size() < 3)
        throw Error("insufficient data");

    const std::size_t n = pts.size();
    std::vector<double> lh(n), le(n);
    for (std::size_t i = 0; i < n; ++i) {
        lh[i] = std::log(pts[i].first);
        le[i] = std::log(pts[i].second);
    }

    // Error ratio per halving of h between neighbours.
    std::vector<double> ratio(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double local_slope = (le[i] - le[i + 1]) / (lh[i] - lh[i + 1]);
        ratio[i] = std::exp2(local_slope);
    }

    OrderEstimate out;
    out.plateau_flags.assign(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (ratio[i] < heur.plateau_ratio)
            out.plateau_flags[i] = out.plateau_flags[i + 1] = true;
    }

    // Largest run of non-plateau pairs whose ratios stay near their median.
    std::size_t best_lo = 0, best_len = 0;
    for (std::size_t lo = 0; lo + 1 < n; ++lo) {
        for (std::size_t hi = lo; hi + 1 < n; ++hi) {
            if (ratio[hi] < heur.plateau_ratio)
                break;
            std::vector<double> win(ratio.begin() + lo, ratio.begin() + hi + 1);
            const double med = median(win);
            const bool tight = std::all_of(win.begin(), win.end(), [&](double q) {
                return std::abs(q / med - 1.0) <= heur.window_tolerance;
            });
            if (!tight)
                continue;
            const std::size_t len = hi - lo + 1;
            if (len > best_len) {
                best_len = len;
                best_lo = lo;
            }
        }
    }
    if (best_len == 0) {
        out.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
        const std::size_t first = best_lo, last = best_lo + best_len;  // point indices, inclusive
        out.slope = lsq_slope(std::span(lh).subspan(first, last - first + 1),
                              std::span(le).subspan(first, last - first + 1));
        out.h_hi = pts[first].first;
        out.h_lo = pts[last].first;
    }

    std::vector<double> flat;
    for (std::size_t i = 0; i < n; ++i) {
        out.h.push_back(pts[i].first);
        if (out.plateau_flags[i])
            flat.push_back(pts[i].second);
    }
    if (!flat.empty())
        out.plateau_level = median(flat);
    return out;
}

std::vector<RankPlateau> plateau_vs_rank(const std::vector<ConvergenceRecord>& records, const Heuristics& heur)
{
    std::map<Index, std::pair<std::vector<double>, std::vector<double>>> by_rank;
    for (const auto& r : records) {
        by_rank[r.r].first.push_back(r.h);
        by_rank[r.r].second.push_back(r.error);
    }
    std::vector<RankPlateau> out;
    for (const auto& [rank, data] : by_rank) {
        RankPlateau p;
        p.r = rank;
        std::optional<double> level;
        try {
            level = estimate_order(data.first, data.second, heur).plateau_level;
        } catch (const Error&) {
        }
        if (level) {
            p.level = *level;
            p.detected = true;
        } else {
            p.level = std::numeric_limits<double>::infinity();
            for (double e : data.second)
                if (std::isfinite(e))
                    p.level = std::min(p.level, e);
        }
        out.push_back(p);
    }
    return out;
}

bool plateaus_monotone(const std::vector<RankPlateau>& levels, const Heuristics& heur)
{
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double prev = levels[i - 1].level, cur = levels[i].level;
        if (cur <= heur.precision_floor)
            continue;
        if (!(cur <= heur.rank_slack * prev))
            return false;
    }
    return true;
}

void flag_plateaus(std::vector<ConvergenceRecord>& records, const Heuristics& heur)
{
    using Key = std::tuple<std::string, std::string, Index>;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i)
        groups[{records[i].method, records[i].tableau, records[i].r}].push_back(i);

    for (const auto& [key, idx] : groups) {
        std::vector<double> h, e;
        for (auto i : idx) {
            h.push_back(records[i].h);
            e.push_back(records[i].error);
        }
        OrderEstimate est;
        try {
            est = estimate_order(h, e, heur);
        } catch (const Error&) {
            continue;
        }
        for (auto i : idx) {
            const auto it = std::find(est.h.begin(), est.h.end(), records[i].h);
            if (it != est.h.end())
                records[i].plateau = est.plateau_flags[static_cast<std::size_t>(it - est.h.begin())];
        }
    }
}

std::string records_to_csv(const std::vector<ConvergenceRecord>& records)
{
    std::ostringstream os;
    os << "problem,theta,n,method,tableau,h,r,error,runtime_s,max_trunc_residual,plateau\n";
    for (const auto& r : records) {
        os << r.problem << ',' << fmt17(r.theta) << ',' << r.n << ',' << r.method << ',' << r.tableau << ','
           << fmt17(r.h) << ',' << r.r << ',' << fmt17(r.error) << ',' << fmt17(r.runtime_seconds) << ','
           << fmt17(r.max_truncation_residual) << ',' << (r.plateau ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string trajectory_to_csv(const std::vector<TrajectoryRow>& rows)
{
    std::ostringstream os;
    os << "k,t,error,trunc_residual,augmented_rank\n";
    for (const auto& r : rows)
        os << r.k << ',' << fmt17(r.t) << ',' << fmt17(r.error) << ',' << fmt17(r.truncation_residual) << ','
           << r.augmented_rank << '\n';
    return os.str();
}

std::vector<ConvergenceRecord> run_study(const StudyConfig& cfg)
{
    validate_config(cfg);
    return detail::with_problem(cfg.problem, [&](const auto& problem) { return run_study(cfg, problem); });
}

std::vector<TrajectoryRow> run_single(const StudyConfig& cfg)
{
    validate_config(cfg);
    return detail::with_problem(cfg.problem, [&](const auto& problem) { return run_single(cfg, problem); });
}

} // namespace rkbug
