#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "specreuse/emission.hpp"
#include "specreuse/hmm.hpp"
#include "specreuse/markov.hpp"
#include "specreuse/metrics.hpp"
#include "specreuse/policy.hpp"
#include "specreuse/rng.hpp"

namespace specreuse {

enum class Method { Baseline, Known, Estimated, Unconditional };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Baseline: return "baseline";
        case Method::Known: return "known";
        case Method::Estimated: return "estimated";
        case Method::Unconditional: return "unconditional";
    }
    return "unknown";
}

inline Method method_from_string(std::string_view s) {
    if (s == "baseline") return Method::Baseline;
    if (s == "known") return Method::Known;
    if (s == "estimated") return Method::Estimated;
    if (s == "unconditional") return Method::Unconditional;
    throw std::invalid_argument("unknown method: " + std::string(s));
}

inline int method_rank(Method m) { return static_cast<int>(m); }

enum class OutputFormat { Csv, JsonSummary };

struct ExperimentConfig {
    double a01 = 0.1;
    double a10 = 0.01;
    int k = 10;
    double sigma0_sq = 1.0;
    std::vector<double> snr_db_grid = {-20, -15, -10, -5, 0, 5, 10, 15};
    double rho_max = 0.1;
    std::int64_t n_train = 200000;
    std::int64_t n_eval = 200000;
    std::uint64_t seed = 1;
    std::vector<Method> methods = {Method::Baseline, Method::Known, Method::Estimated,
                                   Method::Unconditional};
    std::string out_path = "results.csv";
    int workers = 0; // 0 = one per hardware thread, capped at the grid size

    TransitionMatrix transition_matrix() const { return TransitionMatrix::from_rates(a01, a10); }

    void validate() const {
        (void)transition_matrix();
        (void)EmissionModel::from_snr_db(k, 0.0, sigma0_sq);
        if (snr_db_grid.empty()) throw std::invalid_argument("snr grid must not be empty");
        if (!(rho_max > 0.0 && rho_max < 1.0))
            throw std::invalid_argument("rho_max must be in (0,1)");
        if (n_train < 1 || n_eval < 1)
            throw std::invalid_argument("n_train and n_eval must be at least 1");
        if (methods.empty()) throw std::invalid_argument("at least one method required");
    }
};

/// One (snr, method) result row. `status` is "ok" or "method-failed: <reason>";
/// failed rows carry no threshold or ratios.
struct SweepRecord {
    double snr_db = 0.0;
    Method method = Method::Baseline;
    std::optional<double> threshold;
    std::optional<double> ur;
    std::optional<double> ur_stderr;
    std::optional<double> ir;
    std::optional<double> ir_stderr;
    double eta_max = 0.0;
    std::int64_t n_idle = 0;
    std::int64_t n_active = 0;
    std::string status = "ok";

    bool operator==(const SweepRecord&) const = default;
};

inline constexpr std::string_view csv_header =
    "snr_db,method,threshold,ur,ur_stderr,ir,ir_stderr,eta_max,n_idle,n_active,status";

namespace detail {

/// Stream seeds depend only on (master, phase, snr), so grid edits and
/// worker scheduling never change the draws of an existing point.
inline std::uint64_t child_seed(std::uint64_t master, std::string_view phase, double snr_db) {
    return derive_seed(master, hash_tag(phase), std::bit_cast<std::uint64_t>(snr_db));
}

inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad floating-point field: " + std::string(s));
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer field: " + std::string(s));
    return v;
}

inline std::string sanitize_status(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

} // namespace detail

/// Run calibration and evaluation for one SNR point. Training and evaluation
/// traces are independent realizations on disjoint seed streams; no
/// calibration statistic touches evaluation data. A method that cannot be
/// calibrated yields a method-failed record instead of aborting the point.
inline std::vector<SweepRecord> run_point(const ExperimentConfig& cfg, double snr_db) {
    cfg.validate();
    const TransitionMatrix a = cfg.transition_matrix();
    const EmissionModel m = EmissionModel::from_snr_db(cfg.k, snr_db, cfg.sigma0_sq);
    const double eta_max = ur_upper_bound(a, cfg.rho_max);

    const StateTrace train = sample_trace(a, cfg.n_train, detail::child_seed(cfg.seed, "train-states", snr_db));
    Stream train_rng = make_stream(detail::child_seed(cfg.seed, "train-energies", snr_db));
    const std::vector<double> train_y = m.sample_energies(train.states, train_rng);
    const LlrTrace train_z = llr_trace(a, m, train_y);

    const StateTrace eval = sample_trace(a, cfg.n_eval, detail::child_seed(cfg.seed, "eval-states", snr_db));
    Stream eval_rng = make_stream(detail::child_seed(cfg.seed, "eval-energies", snr_db));
    const std::vector<double> eval_y = m.sample_energies(eval.states, eval_rng);
    const LlrTrace eval_z = llr_trace(a, m, eval_y);

    // Calibration pairs: z_k with the state of slot k+1.
    CalibrationSet cal;
    if (cfg.n_train >= 2) {
        cal.z.assign(train_z.z.begin(), train_z.z.end() - 1);
        cal.next_states.emplace(train.states.begin() + 1, train.states.end());
    } else {
        cal.z = train_z.z;
    }

    const std::size_t n_scored = eval.states.size() - 1;
    const std::span<const std::uint8_t> q_next(eval.states.data() + 1, n_scored);

    const auto score_llr = [&](const LlrPolicy& p) {
        std::vector<std::uint8_t> u(n_scored);
        for (std::size_t k = 0; k < n_scored; ++k) u[k] = p.decide(eval_z.z[k]) ? 1 : 0;
        return empirical_ur_ir(u, q_next);
    };

    std::vector<SweepRecord> records;
    for (const Method method : {Method::Baseline, Method::Known, Method::Estimated,
                                Method::Unconditional}) {
        bool requested = false;
        for (const Method want : cfg.methods) requested |= (want == method);
        if (!requested) continue;

        SweepRecord rec;
        rec.snr_db = snr_db;
        rec.method = method;
        rec.eta_max = eta_max;
        try {
            double threshold = 0.0;
            UrIr score;
            if (method == Method::Baseline) {
                const BaselinePolicy p = baseline_threshold(a, m, cfg.rho_max);
                threshold = p.theta_e;
                std::vector<std::uint8_t> u(n_scored);
                for (std::size_t k = 0; k < n_scored; ++k) u[k] = p.decide(eval_y[k]) ? 1 : 0;
                score = empirical_ur_ir(u, q_next);
            } else {
                LlrPolicy p;
                if (method == Method::Known) {
                    p = calibrate_known(cal, cfg.rho_max);
                } else if (method == Method::Estimated) {
                    const SmoothedStates sm = forward_backward(a, m, train_y);
                    const std::span<const std::uint8_t> q_hat_next(sm.q_hat.data() + 1,
                                                                   cal.z.size());
                    p = calibrate_estimated(cal, q_hat_next, cfg.rho_max);
                } else {
                    p = calibrate_unconditional(cal, cfg.rho_max, a);
                }
                threshold = p.theta_llr;
                score = score_llr(p);
            }
            rec.threshold = threshold;
            rec.ur = score.ur;
            rec.ur_stderr = score.ur_stderr();
            rec.ir = score.ir;
            rec.ir_stderr = score.ir_stderr();
            rec.n_idle = score.n_idle;
            rec.n_active = score.n_active;
            rec.status = "ok";
        } catch (const std::exception& e) {
            rec.status = detail::sanitize_status(std::string("method-failed: ") + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

/// Sweep every grid point, optionally in parallel. Output order and content
/// are independent of the worker count: per-point seeds derive from the
/// config alone and records are gathered and sorted by (snr, method).
inline std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_points = cfg.snr_db_grid.size();
    std::vector<std::vector<SweepRecord>> per_point(n_points);

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > n_points) workers = static_cast<unsigned>(n_points);

    if (workers <= 1) {
        for (std::size_t i = 0; i < n_points; ++i)
            per_point[i] = run_point(cfg, cfg.snr_db_grid[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        std::atomic<bool> failed{false};
        std::string error_message;
        std::mutex error_mutex;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n_points || failed.load()) break;
                    try {
                        per_point[i] = run_point(cfg, cfg.snr_db_grid[i]);
                    } catch (const std::exception& e) {
                        const std::lock_guard<std::mutex> lock(error_mutex);
                        error_message = e.what();
                        failed.store(true);
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failed.load()) throw std::runtime_error(error_message);
    }

    std::vector<SweepRecord> records;
    for (auto& point : per_point)
        for (auto& rec : point) records.push_back(std::move(rec));
    std::stable_sort(records.begin(), records.end(), [](const SweepRecord& x, const SweepRecord& y) {
        if (x.snr_db != y.snr_db) return x.snr_db < y.snr_db;
        return method_rank(x.method) < method_rank(y.method);
    });
    return records;
}

inline std::string render_csv(std::span<const SweepRecord> records) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? detail::format_double(*v) : std::string();
    };
    std::string out{csv_header};
    out += '\n';
    for (const SweepRecord& r : records) {
        out += detail::format_double(r.snr_db);
        out += ',';
        out += to_string(r.method);
        out += ',';
        out += opt(r.threshold);
        out += ',';
        out += opt(r.ur);
        out += ',';
        out += opt(r.ur_stderr);
        out += ',';
        out += opt(r.ir);
        out += ',';
        out += opt(r.ir_stderr);
        out += ',';
        out += detail::format_double(r.eta_max);
        out += ',';
        out += std::to_string(r.n_idle);
        out += ',';
        out += std::to_string(r.n_active);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

inline std::vector<SweepRecord> parse_csv(std::string_view text) {
    std::vector<SweepRecord> records;
    std::size_t pos = 0;
    const auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= text.size()) return std::nullopt;
        const std::size_t end = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, end == std::string_view::npos ? end : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        return line;
    };

    const auto header = next_line();
    if (!header || *header != csv_header) throw std::invalid_argument("unexpected csv header");

    const auto opt = [](std::string_view field) -> std::optional<double> {
        if (field.empty()) return std::nullopt;
        return detail::parse_double(field);
    };

    while (const auto line = next_line()) {
        if (line->empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line->size(); ++i) {
            if (i == line->size() || (*line)[i] == ',') {
                fields.push_back(line->substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 11) throw std::invalid_argument("bad csv row");
        SweepRecord r;
        r.snr_db = detail::parse_double(fields[0]);
        r.method = method_from_string(fields[1]);
        r.threshold = opt(fields[2]);
        r.ur = opt(fields[3]);
        r.ur_stderr = opt(fields[4]);
        r.ir = opt(fields[5]);
        r.ir_stderr = opt(fields[6]);
        r.eta_max = detail::parse_double(fields[7]);
        r.n_idle = detail::parse_int(fields[8]);
        r.n_active = detail::parse_int(fields[9]);
        r.status = std::string(fields[10]);
        records.push_back(std::move(r));
    }
    return records;
}

inline nlohmann::json json_summary(std::span<const SweepRecord> records,
                                   const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    std::vector<std::string> method_names;
    for (const Method m : cfg.methods) method_names.emplace_back(to_string(m));
    j["config"] = {{"a01", cfg.a01},
                   {"a10", cfg.a10},
                   {"k", cfg.k},
                   {"sigma0_sq", cfg.sigma0_sq},
                   {"snr_db", cfg.snr_db_grid},
                   {"rho_max", cfg.rho_max},
                   {"n_train", cfg.n_train},
                   {"n_eval", cfg.n_eval},
                   {"seed", cfg.seed},
                   {"methods", method_names}};
    j["records"] = nlohmann::json::array();
    const auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const SweepRecord& r : records) {
        j["records"].push_back({{"snr_db", r.snr_db},
                                {"method", to_string(r.method)},
                                {"threshold", opt(r.threshold)},
                                {"ur", opt(r.ur)},
                                {"ur_stderr", opt(r.ur_stderr)},
                                {"ir", opt(r.ir)},
                                {"ir_stderr", opt(r.ir_stderr)},
                                {"eta_max", r.eta_max},
                                {"n_idle", r.n_idle},
                                {"n_active", r.n_active},
                                {"status", r.status}});
    }
    return j;
}

inline void emit_results(std::span<const SweepRecord> records, const ExperimentConfig& cfg,
                         const std::string& path, OutputFormat format) {
    if (records.empty()) throw std::invalid_argument("no records to emit");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    if (format == OutputFormat::Csv) {
        out << render_csv(records);
    } else {
        out << json_summary(records, cfg).dump(2) << '\n';
    }
    if (!out) throw std::runtime_error("cannot write output file: " + path);
}

/// "lo:step:hi" (inclusive) or a comma-separated list of dB values.
inline std::vector<double> parse_snr_spec(std::string_view spec) {
    std::vector<double> grid;
    if (spec.find(':') != std::string_view::npos) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= spec.size(); ++i) {
            if (i == spec.size() || spec[i] == ':') {
                parts.push_back(spec.substr(start, i - start));
                start = i + 1;
            }
        }
        if (parts.size() != 3) throw std::invalid_argument("snr range must be lo:step:hi");
        const double lo = detail::parse_double(parts[0]);
        const double step = detail::parse_double(parts[1]);
        const double hi = detail::parse_double(parts[2]);
        if (!(step > 0.0)) throw std::invalid_argument("snr step must be positive");
        for (double v = lo; v <= hi + 1e-9; v += step) grid.push_back(v);
    } else {
        std::size_t start = 0;
        for (std::size_t i = 0; i <= spec.size(); ++i) {
            if (i == spec.size() || spec[i] == ',') {
                grid.push_back(detail::parse_double(spec.substr(start, i - start)));
                start = i + 1;
            }
        }
    }
    if (grid.empty()) throw std::invalid_argument("snr grid must not be empty");
    return grid;
}

inline std::vector<Method> parse_methods(std::string_view spec) {
    std::vector<Method> methods;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= spec.size(); ++i) {
        if (i == spec.size() || spec[i] == ',') {
            methods.push_back(method_from_string(spec.substr(start, i - start)));
            start = i + 1;
        }
    }
    return methods;
}

/// Flat "key = value" file; '#' starts a comment. Unknown keys are errors.
inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::string line;
    const auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    };
    while (std::getline(in, line)) {
        std::string_view sv = line;
        if (const auto hash = sv.find('#'); hash != std::string_view::npos)
            sv = sv.substr(0, hash);
        sv = trim(sv);
        if (sv.empty()) continue;
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("bad config line: " + line);
        const std::string_view key = trim(sv.substr(0, eq));
        const std::string_view value = trim(sv.substr(eq + 1));
        if (key == "a01") cfg.a01 = detail::parse_double(value);
        else if (key == "a10") cfg.a10 = detail::parse_double(value);
        else if (key == "k") cfg.k = static_cast<int>(detail::parse_int(value));
        else if (key == "sigma0_sq") cfg.sigma0_sq = detail::parse_double(value);
        else if (key == "snr") cfg.snr_db_grid = parse_snr_spec(value);
        else if (key == "rho_max") cfg.rho_max = detail::parse_double(value);
        else if (key == "n_train") cfg.n_train = detail::parse_int(value);
        else if (key == "n_eval") cfg.n_eval = detail::parse_int(value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(value));
        else if (key == "methods") cfg.methods = parse_methods(value);
        else if (key == "out") cfg.out_path = std::string(value);
        else if (key == "workers") cfg.workers = static_cast<int>(detail::parse_int(value));
        else throw std::invalid_argument("unknown config key: " + std::string(key));
    }
}

} // namespace specreuse
