#pragma once

// One entry point per algorithm nickname: fit on a training view, save, load.

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>

#include "dhf/ingest.hpp"
#include "dhf/model_io.hpp"
#include "dhf/models.hpp"
#include "dhf/neural.hpp"

namespace dhf {

struct FitOptions {
    std::uint64_t seed = 0;
    NeuralOptions neural;
};

inline std::unique_ptr<TrainedForecaster> fit_algorithm(Algorithm algo, const CleanDataset& train,
                                                        std::string_view counter_id, const FitOptions& opts = {}) {
    const std::string id(counter_id);
    if (!train.has_counter(id)) throw ValidationError("unknown counter '" + id + "'");
    if (is_dotzauer(algo)) {
        const auto [variant, mode] = dotzauer_variant(algo);
        return std::make_unique<DotzauerForecaster>(algo, id, dotzauer_fit(train, id, variant, mode));
    }
    if (is_wrnh(algo) || is_wrwh(algo)) {
        const auto [mode, fs] = wr_variant(algo);
        return std::make_unique<WRegressorForecaster>(algo, id, wr_fit(train, id, mode, fs));
    }
    if (algo == Algorithm::FFNN || algo == Algorithm::RBFNN) {
        NeuralOptions n = opts.neural;
        n.train.seed = opts.seed;
        return fit_neural(algo, train, id, n);
    }
    return std::make_unique<MovingAverageForecaster>(id);
}

inline void save_model(const TrainedForecaster& f, std::ostream& out) {
    ModelWriter w;
    w.text("algorithm", algorithm_name(f.algorithm()));
    w.text("counter", f.counter_id());
    f.save(w);
    w.write(out);
}

inline void save_model(const TrainedForecaster& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    save_model(f, out);
}

inline std::unique_ptr<TrainedForecaster> load_model(const ModelReader& in) {
    const Algorithm algo = parse_algorithm(in.text("algorithm"));
    std::string counter = in.text("counter");
    if (is_dotzauer(algo)) return DotzauerForecaster::load(algo, std::move(counter), in);
    if (is_wrnh(algo) || is_wrwh(algo)) return WRegressorForecaster::load(algo, std::move(counter), in);
    if (algo == Algorithm::FFNN || algo == Algorithm::RBFNN) {
        return NeuralForecaster::load(algo, std::move(counter), in);
    }
    return std::make_unique<MovingAverageForecaster>(std::move(counter));
}

inline std::unique_ptr<TrainedForecaster> load_model(std::istream& in) { return load_model(ModelReader(in)); }
inline std::unique_ptr<TrainedForecaster> load_model(const std::string& path) {
    return load_model(ModelReader::from_file(path));
}

}  // namespace dhf
