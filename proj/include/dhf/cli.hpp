#pragma once

// Command-line front end: gen | clean | fit | forecast | bench | pareto.
// Exit codes: 0 success, 1 invalid input, 2 runtime failure. Progress goes to
// the error stream; machine-readable output goes to files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dhf/algorithms.hpp"
#include "dhf/bench.hpp"
#include "dhf/ingest.hpp"

namespace dhf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline constexpr const char* kLatitudeEnv = "DHF_LATITUDE";
inline constexpr const char* kTimezoneEnv = "DHF_TIMEZONE";

// Site latitude: flag, then DHF_LATITUDE, then the built-in default.
inline double resolve_latitude(const std::optional<double>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kLatitudeEnv)) {
        const auto v = ::dhf::detail::parse_double(env);
        if (!v || !(*v > -90.0 && *v < 90.0)) {
            throw ValidationError(std::string(kLatitudeEnv) + " must be a latitude in (-90, 90)");
        }
        return *v;
    }
    return kDefaultLatitude;
}

// Timestamps are read as wall-clock hours of the dataset's zone. The zone is
// only checked and reported; no conversion is applied.
inline std::string resolve_timezone() {
    const char* env = std::getenv(kTimezoneEnv);
    if (env == nullptr || *env == '\0') return "UTC";
    const std::string tz(env);
    if (tz == "UTC" || tz == "Z") return "UTC";
    const bool offset = tz.size() == 6 && (tz[0] == '+' || tz[0] == '-') && tz[3] == ':' &&
                        std::isdigit(static_cast<unsigned char>(tz[1])) &&
                        std::isdigit(static_cast<unsigned char>(tz[2])) &&
                        std::isdigit(static_cast<unsigned char>(tz[4])) &&
                        std::isdigit(static_cast<unsigned char>(tz[5]));
    if (!offset) throw ValidationError(std::string(kTimezoneEnv) + " must be UTC or an offset like +01:00");
    return tz;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Input errors in a flag value are reported against the flag.
template <class F>
auto for_flag(const char* flag, F&& parse) {
    try {
        return parse();
    } catch (const Error& e) {
        throw ValidationError(std::string(flag) + ": " + e.what());
    }
}

inline Interval interval_flag(const char* flag, const std::string& text) {
    return for_flag(flag, [&] { return parse_interval(text); });
}

inline Timestamp timestamp_flag(const char* flag, const std::string& text) {
    return for_flag(flag, [&] {
        const Timestamp ts = parse_timestamp(text);
        require_aligned(ts);
        return ts;
    });
}

inline Algorithm algorithm_flag(const char* flag, const std::string& text) {
    return for_flag(flag, [&] { return parse_algorithm(text); });
}

inline CleanDataset load_clean(const std::string& path, double latitude, std::ostream& err) {
    LoadOptions lo;
    lo.latitude = latitude;
    const RawDataset raw = load_csv(path, lo);
    if (!raw.rejects.empty()) err << "dhf: " << raw.rejects.size() << " malformed rows skipped in " << path << '\n';
    return clean(raw);
}

struct GenArgs {
    std::uint64_t seed = 0;
    std::optional<std::size_t> hours, counters;
    std::optional<double> sigma, latitude;
    std::string start, config, out;
};
struct CleanArgs {
    std::string data, out, rejects;
    std::optional<double> latitude;
};
struct FitArgs {
    std::string algo, counter, data, train, model, log;
    std::uint64_t seed = 0;
    std::optional<std::size_t> epochs, patience;
    std::optional<double> latitude;
};
struct ForecastArgs {
    std::string model, data, origin, out;
    std::optional<double> latitude;
};
struct BenchArgs {
    std::string algos, data, train, test, report, plot, counters;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<std::size_t> epochs;
    std::optional<double> latitude;
};
struct ParetoArgs {
    std::string report, time = "train", quality = "mape", out;
};

inline void run_gen(const GenArgs& a, std::ostream& err) {
    GeneratorConfig cfg;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw ValidationError("--config: cannot open '" + a.config + "'");
        cfg = parse_generator_config(in);
    }
    if (a.hours) cfg.hours = *a.hours;
    if (a.counters) cfg.counters = *a.counters;
    if (a.sigma) cfg.sigma = *a.sigma;
    if (a.latitude || std::getenv(kLatitudeEnv)) cfg.latitude = resolve_latitude(a.latitude);
    if (!a.start.empty()) cfg.start = timestamp_flag("--start", a.start);
    cfg.validate();
    const RawDataset ds = generate_synthetic(cfg, a.seed);
    write_csv(a.out, ds);
    err << "dhf: wrote " << ds.rows.size() << " rows for " << ds.counters.size() << " counters to " << a.out << '\n';
}

inline void run_clean(const CleanArgs& a, std::ostream& err) {
    LoadOptions lo;
    lo.latitude = resolve_latitude(a.latitude);
    const RawDataset raw = load_csv(a.data, lo);
    const CleanDataset ds = clean(raw);
    const RawDataset valid = to_raw(ds);
    write_csv(a.out, valid);
    if (!a.rejects.empty()) write_rejects(a.rejects, raw.rejects);
    err << "dhf: kept " << valid.rows.size() << " of " << raw.rows.size() << " readings, " << raw.rejects.size()
        << " malformed rows\n";
}

inline void run_fit(const FitArgs& a, std::ostream& err) {
    const Algorithm algo = algorithm_flag("--algo", a.algo);
    CleanDataset ds = load_clean(a.data, resolve_latitude(a.latitude), err);
    if (!ds.has_counter(a.counter)) throw ValidationError("--counter: unknown counter '" + a.counter + "'");
    if (!a.train.empty()) {
        const Interval iv = interval_flag("--train", a.train);
        ds = slice(ds, iv.start, iv.end);
        if (ds.hours == 0) throw ValidationError("--train: interval does not overlap the data");
    }
    FitOptions opts;
    opts.seed = a.seed;
    if (a.epochs) opts.neural.train.max_epochs = *a.epochs;
    if (a.patience) opts.neural.train.patience = *a.patience;
    const auto model = fit_algorithm(algo, ds, a.counter, opts);
    save_model(*model, a.model);
    if (!a.log.empty()) {
        const auto* nn = dynamic_cast<const NeuralForecaster*>(model.get());
        if (nn == nullptr) throw ValidationError("--log: only neural algorithms record a training curve");
        nn::write_training_log(a.log, nn->training().log);
    }
    err << "dhf: fitted " << a.algo << " for counter " << a.counter << " -> " << a.model << '\n';
}

inline void run_forecast(const ForecastArgs& a, std::ostream& err) {
    const auto model = load_model(a.model);
    const Timestamp origin = timestamp_flag("--origin", a.origin);
    const CleanDataset ds = load_clean(a.data, resolve_latitude(a.latitude), err);
    if (!ds.has_counter(model->counter_id())) {
        throw ValidationError("--data: no readings for counter '" + model->counter_id() + "'");
    }
    const ForecastWindow w = model->predict({ds.counter(model->counter_id()), ds.weather, origin});
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write '" + a.out + "'");
    for (std::size_t p = 0; p < w.values.size(); ++p) {
        out << (p ? "," : "") << ::dhf::detail::format_double(w.values[p]);
    }
    out << '\n';
    err << "dhf: forecast from " << format_timestamp(origin) << " -> " << a.out << '\n';
}

inline void run_bench(const BenchArgs& a, std::ostream& err) {
    std::vector<AlgorithmSpec> specs;
    FitOptions opts;
    opts.seed = a.seed;
    if (a.epochs) opts.neural.train.max_epochs = *a.epochs;
    const auto names = split_list(a.algos);
    if (names.empty()) throw ValidationError("--algos: no algorithm given");
    for (const auto& n : names) specs.push_back(standard_algorithm(algorithm_flag("--algos", n), opts));
    const Interval train = interval_flag("--train", a.train);
    const Interval test = interval_flag("--test", a.test);
    if (a.jobs == 0) throw ValidationError("--jobs must be at least 1");
    const CleanDataset ds = load_clean(a.data, resolve_latitude(a.latitude), err);

    EvalOptions eo;
    eo.jobs = a.jobs;
    eo.counters = split_list(a.counters);
    eo.progress = [&err](const ScoreCard& c) {
        err << "dhf: " << c.algorithm << " / " << c.counter << ": ";
        if (c.ok) {
            err << "MAPE " << c.mape << "%, MSE " << c.mse << ", train " << c.train_time_s << " s, predict "
                << c.predict_time_us << " us\n";
        } else {
            err << "failed: " << c.error << '\n';
        }
    };
    const BenchReport r = evaluate(specs, ds, train, test, eo);
    write_report(a.report, r);
    if (!a.plot.empty()) write_plot_csv(a.plot, r);
    err << "dhf: " << r.scorecards.size() << " scorecards (" << r.failures << " failed) over " << r.grid_origins
        << " origins -> " << a.report << '\n';
}

inline void run_pareto(const ParetoArgs& a, std::ostream& out, std::ostream& err) {
    const std::string key = for_flag("--time/--quality", [&] { return pareto_key(a.time, a.quality); });
    const BenchReport r = read_report(a.report);
    const auto set = pareto_from_summaries(r.summaries, a.time, a.quality);
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw DataError("cannot write '" + a.out + "'");
    }
    std::ostream& sink = a.out.empty() ? out : file;
    for (const auto& name : set) sink << name << '\n';
    const auto it = r.nondominated.find(key);
    if (it != r.nondominated.end() && it->second != set) {
        err << "dhf: warning: recomputed set differs from the one stored in the report\n";
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"District heating demand forecasting toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic dataset with a known decomposition");
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--hours", gen.hours, "Number of hours");
    g->add_option("--counters", gen.counters, "Number of counters, excluding the sum counter");
    g->add_option("--sigma", gen.sigma, "Noise level");
    g->add_option("--latitude", gen.latitude, "Site latitude for day length");
    g->add_option("--start", gen.start, "First timestamp");
    g->add_option("--config", gen.config, "key=value configuration file");
    g->add_option("--out", gen.out, "Output CSV")->required();

    CleanArgs cl;
    auto* c = app.add_subcommand("clean", "Apply the validity rules and keep valid readings");
    c->add_option("--data", cl.data, "Input CSV")->required();
    c->add_option("--out", cl.out, "Output CSV")->required();
    c->add_option("--rejects", cl.rejects, "CSV of malformed rows");
    c->add_option("--latitude", cl.latitude, "Site latitude for day length");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit one algorithm for one counter");
    f->add_option("--algo", fit.algo, "Algorithm nickname")->required();
    f->add_option("--counter", fit.counter, "Counter id")->required();
    f->add_option("--data", fit.data, "Input CSV")->required();
    f->add_option("--train", fit.train, "Training interval start/end");
    f->add_option("--model", fit.model, "Output model file")->required();
    f->add_option("--seed", fit.seed, "Random seed");
    f->add_option("--epochs", fit.epochs, "Maximum training epochs");
    f->add_option("--patience", fit.patience, "Early-stopping patience");
    f->add_option("--log", fit.log, "Training-curve CSV");
    f->add_option("--latitude", fit.latitude, "Site latitude for day length");

    ForecastArgs fc;
    auto* p = app.add_subcommand("forecast", "Forecast 72 hours from one origin");
    p->add_option("--model", fc.model, "Model file")->required();
    p->add_option("--data", fc.data, "CSV with history and weather")->required();
    p->add_option("--origin", fc.origin, "Forecast origin")->required();
    p->add_option("--out", fc.out, "Output CSV row")->required();
    p->add_option("--latitude", fc.latitude, "Site latitude for day length");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Rolling-origin benchmark");
    b->add_option("--algos", bench.algos, "Comma-separated algorithm nicknames")->required();
    b->add_option("--data", bench.data, "Input CSV")->required();
    b->add_option("--train", bench.train, "Training interval start/end")->required();
    b->add_option("--test", bench.test, "Test interval start/end")->required();
    b->add_option("--report", bench.report, "Output JSON report")->required();
    b->add_option("--plot", bench.plot, "Output CSV of per-algorithm quartiles");
    b->add_option("--counters", bench.counters, "Comma-separated counter ids");
    b->add_option("--jobs", bench.jobs, "Worker threads");
    b->add_option("--seed", bench.seed, "Random seed");
    b->add_option("--epochs", bench.epochs, "Maximum training epochs for networks");
    b->add_option("--latitude", bench.latitude, "Site latitude for day length");

    ParetoArgs pa;
    auto* q = app.add_subcommand("pareto", "Nondominated algorithms of a report");
    q->add_option("--report", pa.report, "JSON report")->required();
    q->add_option("--time", pa.time, "train or predict");
    q->add_option("--quality", pa.quality, "mape or mse");
    q->add_option("--out", pa.out, "Output file, one algorithm per line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        const std::string tz = resolve_timezone();
        if (tz != "UTC") err << "dhf: timestamps are wall-clock hours at " << tz << '\n';
        if (g->parsed()) run_gen(gen, err);
        else if (c->parsed()) run_clean(cl, err);
        else if (f->parsed()) run_fit(fit, err);
        else if (p->parsed()) run_forecast(fc, err);
        else if (b->parsed()) run_bench(bench, err);
        else if (q->parsed()) run_pareto(pa, out, err);
    } catch (const ValidationError& e) {
        err << "dhf: error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const AlignmentError& e) {
        err << "dhf: error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "dhf: error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace dhf::cli
