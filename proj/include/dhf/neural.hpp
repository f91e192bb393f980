#pragma once

// A small dense network engine: Dense, BatchNorm, LeakyReLU, Dropout and
// Gaussian RBF layers with exact backpropagation of the MSE loss, Adam, and
// early stopping on a chronological validation tail. Rows are samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhf/core.hpp"
#include "dhf/ingest.hpp"
#include "dhf/model_io.hpp"
#include "dhf/models.hpp"

namespace dhf::nn {

using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Mode { Train, Infer };

struct Param {
    Matrix* value;
    Matrix* grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    // Pure inference path; never touches caches or running statistics.
    virtual Matrix infer(const Matrix& x) const = 0;
    // Training path; caches what backward() needs. Running statistics are
    // only updated when update_stats is set.
    virtual Matrix forward_train(const Matrix& x, Rng& rng, bool update_stats) = 0;
    // Accumulates parameter gradients and returns d loss / d input.
    virtual Matrix backward(const Matrix& grad_out) = 0;

    virtual std::vector<Param> params() { return {}; }
    // Trainable values followed by persistent buffers, in a fixed order.
    virtual std::vector<Matrix*> state() { return {}; }
};

class Dense final : public Layer {
public:
    Dense(std::size_t in, std::size_t out, Rng& rng)
        : W(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out)),
          b(1, static_cast<Eigen::Index>(out)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
        gW = Matrix::Zero(W.rows(), W.cols());
        gb = Matrix::Zero(1, b.cols());
    }

    std::string kind() const override { return "dense"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    Matrix infer(const Matrix& x) const override { return (x * W).rowwise() + b.row(0); }
    Matrix forward_train(const Matrix& x, Rng&, bool) override {
        x_ = x;
        return infer(x);
    }
    Matrix backward(const Matrix& g) override {
        gW += x_.transpose() * g;
        gb += g.colwise().sum();
        return g * W.transpose();
    }
    std::vector<Param> params() override { return {{&W, &gW}, {&b, &gb}}; }
    std::vector<Matrix*> state() override { return {&W, &b}; }

    Matrix W, b, gW, gb;

private:
    Matrix x_;
};

class BatchNorm final : public Layer {
public:
    explicit BatchNorm(std::size_t dim, double momentum = 0.1, double eps = 1e-5)
        : gamma(Matrix::Ones(1, static_cast<Eigen::Index>(dim))),
          beta(Matrix::Zero(1, static_cast<Eigen::Index>(dim))),
          running_mean(Matrix::Zero(1, static_cast<Eigen::Index>(dim))),
          running_var(Matrix::Ones(1, static_cast<Eigen::Index>(dim))),
          ggamma(Matrix::Zero(1, static_cast<Eigen::Index>(dim))),
          gbeta(Matrix::Zero(1, static_cast<Eigen::Index>(dim))),
          momentum_(momentum),
          eps_(eps) {}

    std::string kind() const override { return "batchnorm"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

    Matrix infer(const Matrix& x) const override {
        const Eigen::RowVectorXd scale =
            gamma.row(0).array() / (running_var.row(0).array() + eps_).sqrt();
        const Eigen::RowVectorXd shift = beta.row(0).array() - running_mean.row(0).array() * scale.array();
        return (x.array().rowwise() * scale.array()).rowwise() + shift.array();
    }

    Matrix forward_train(const Matrix& x, Rng&, bool update_stats) override {
        const auto n = static_cast<double>(x.rows());
        const Eigen::RowVectorXd mu = x.colwise().mean();
        const Matrix centered = x.rowwise() - mu;
        const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
        inv_std_ = (var.array() + eps_).sqrt().inverse();
        x_hat_ = centered.array().rowwise() * inv_std_.array();
        if (update_stats) {
            const double unbias = x.rows() > 1 ? n / (n - 1.0) : 1.0;
            running_mean = (1.0 - momentum_) * running_mean + momentum_ * mu;
            running_var = (1.0 - momentum_) * running_var + momentum_ * unbias * var;
        }
        return (x_hat_.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
    }

    Matrix backward(const Matrix& g) override {
        const auto n = static_cast<double>(g.rows());
        ggamma += (g.array() * x_hat_.array()).colwise().sum().matrix();
        gbeta += g.colwise().sum();
        const Matrix dxhat = g.array().rowwise() * gamma.row(0).array();
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * x_hat_.array()).colwise().sum();
        Matrix dx = (n * dxhat.array()).rowwise() - sum_dxhat.array();
        dx.array() -= x_hat_.array().rowwise() * sum_dxhat_xhat.array();
        dx.array().rowwise() *= (inv_std_.array() / n);
        return dx;
    }

    std::vector<Param> params() override { return {{&gamma, &ggamma}, {&beta, &gbeta}}; }
    std::vector<Matrix*> state() override { return {&gamma, &beta, &running_mean, &running_var}; }

    Matrix gamma, beta, running_mean, running_var, ggamma, gbeta;

private:
    double momentum_;
    double eps_;
    Matrix x_hat_;
    Eigen::RowVectorXd inv_std_;
};

class LeakyReLU final : public Layer {
public:
    explicit LeakyReLU(double negative_slope = 0.01) : alpha_(negative_slope) {}

    std::string kind() const override { return "leaky_relu"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<LeakyReLU>(*this); }

    Matrix infer(const Matrix& x) const override {
        return x.unaryExpr([a = alpha_](double v) { return v > 0.0 ? v : a * v; });
    }
    Matrix forward_train(const Matrix& x, Rng&, bool) override {
        x_ = x;
        return infer(x);
    }
    Matrix backward(const Matrix& g) override {
        return g.binaryExpr(x_, [a = alpha_](double gv, double xv) { return xv > 0.0 ? gv : a * gv; });
    }
    double negative_slope() const { return alpha_; }

private:
    double alpha_;
    Matrix x_;
};

class Dropout final : public Layer {
public:
    explicit Dropout(double p) : p_(p) {
        if (!(p >= 0.0 && p < 1.0)) throw ValidationError("dropout probability must be in [0, 1)");
    }

    std::string kind() const override { return "dropout"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

    Matrix infer(const Matrix& x) const override { return x; }
    Matrix forward_train(const Matrix& x, Rng& rng, bool) override {
        if (!enabled || p_ == 0.0) {
            mask_ = Matrix::Ones(x.rows(), x.cols());
            return x;
        }
        std::bernoulli_distribution keep(1.0 - p_);
        const double scale = 1.0 / (1.0 - p_);
        mask_.resize(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = keep(rng) ? scale : 0.0;
        return x.cwiseProduct(mask_);
    }
    Matrix backward(const Matrix& g) override { return g.cwiseProduct(mask_); }
    double probability() const { return p_; }

    bool enabled = true;

private:
    double p_;
    Matrix mask_;
};

// Gaussian units: out[n][k] = exp(-|x_n - c_k|^2 / (2 w_k^2)).
class RBF final : public Layer {
public:
    RBF(std::size_t in, std::size_t units, Rng& rng)
        : centers(static_cast<Eigen::Index>(units), static_cast<Eigen::Index>(in)),
          widths(Matrix::Ones(1, static_cast<Eigen::Index>(units))) {
        std::normal_distribution<double> nd(0.0, 1.0);
        for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = nd(rng);
        gcenters = Matrix::Zero(centers.rows(), centers.cols());
        gwidths = Matrix::Zero(1, widths.cols());
    }

    std::string kind() const override { return "rbf"; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<RBF>(*this); }

    Matrix infer(const Matrix& x) const override { return activations(x, sq_distances(x)); }
    Matrix forward_train(const Matrix& x, Rng&, bool) override {
        x_ = x;
        d2_ = sq_distances(x);
        out_ = activations(x, d2_);
        return out_;
    }
    Matrix backward(const Matrix& g) override {
        const Eigen::RowVectorXd inv_w2 = widths.row(0).array().square().inverse();
        const Matrix G = g.cwiseProduct(out_);
        const Matrix A = G.array().rowwise() * inv_w2.array();  // n x k
        if (trainable) {
            gcenters += A.transpose() * x_;
            gcenters -= (centers.array().colwise() * A.colwise().sum().transpose().array()).matrix();
            const Eigen::RowVectorXd inv_w3 = widths.row(0).array().cube().inverse();
            gwidths += ((G.cwiseProduct(d2_)).colwise().sum().array() * inv_w3.array()).matrix();
        }
        Matrix dx = A * centers;
        dx -= (x_.array().colwise() * A.rowwise().sum().array()).matrix();
        return dx;
    }
    std::vector<Param> params() override {
        if (!trainable) return {};
        return {{&centers, &gcenters}, {&widths, &gwidths}};
    }
    std::vector<Matrix*> state() override { return {&centers, &widths}; }

    Matrix centers, widths, gcenters, gwidths;
    bool trainable = true;

private:
    Matrix sq_distances(const Matrix& x) const {
        Matrix d2(x.rows(), centers.rows());
        for (Eigen::Index k = 0; k < centers.rows(); ++k) {
            d2.col(k) = (x.rowwise() - centers.row(k)).rowwise().squaredNorm();
        }
        return d2;
    }
    Matrix activations(const Matrix&, const Matrix& d2) const {
        const Eigen::RowVectorXd coef = -0.5 * widths.row(0).array().square().inverse();
        return (d2.array().rowwise() * coef.array()).exp();
    }

    Matrix x_, d2_, out_;
};

class Network {
public:
    Network() = default;
    Network(const Network& other) : input_dim_(other.input_dim_), output_dim_(other.output_dim_) {
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
    }
    Network& operator=(const Network& other) {
        if (this != &other) {
            Network tmp(other);
            *this = std::move(tmp);
        }
        return *this;
    }
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    Network(std::size_t input_dim, std::size_t output_dim) : input_dim_(input_dim), output_dim_(output_dim) {}

    template <class L>
    L& add(std::unique_ptr<L> layer) {
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

    Matrix infer(const Matrix& x) const {
        check_input(x);
        Matrix h = x;
        for (const auto& l : layers_) h = l->infer(h);
        return h;
    }

    Matrix forward(const Matrix& x, Mode mode, Rng& rng, bool update_stats = true) {
        if (mode == Mode::Infer) return infer(x);
        check_input(x);
        Matrix h = x;
        for (auto& l : layers_) h = l->forward_train(h, rng, update_stats);
        return h;
    }

    void backward(const Matrix& grad_out) {
        Matrix g = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    }

    std::vector<Param> params() {
        std::vector<Param> out;
        for (auto& l : layers_) {
            auto p = l->params();
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

    std::vector<Matrix*> state() {
        std::vector<Matrix*> out;
        for (auto& l : layers_) {
            auto s = l->state();
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }

    std::vector<Matrix> snapshot() {
        std::vector<Matrix> out;
        for (Matrix* m : state()) out.push_back(*m);
        return out;
    }
    void restore(const std::vector<Matrix>& snap) {
        auto s = state();
        for (std::size_t i = 0; i < s.size(); ++i) *s[i] = snap[i];
    }

    void zero_grad() {
        for (auto& p : params()) p.grad->setZero();
    }

    void set_dropout_enabled(bool on) {
        for (auto& l : layers_) {
            if (auto* d = dynamic_cast<Dropout*>(l.get())) d->enabled = on;
        }
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto& p : params()) n += static_cast<std::size_t>(p.value->size());
        return n;
    }

private:
    void check_input(const Matrix& x) const {
        if (static_cast<std::size_t>(x.cols()) != input_dim_) {
            throw ValidationError("network expects " + std::to_string(input_dim_) + " input columns, got " +
                                  std::to_string(x.cols()));
        }
    }

    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Mean over every element, as torch.nn.MSELoss does by default.
inline double mse_loss(const Matrix& pred, const Matrix& target) {
    return (pred - target).array().square().mean();
}
inline Matrix mse_grad(const Matrix& pred, const Matrix& target) {
    return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

inline constexpr double kFfnnDropout = 0.406;
inline constexpr std::size_t kRbfUnits = 16;

// Input BatchNorm; Dense->BatchNorm->LeakyReLU->Dropout twice; Dense output.
inline Network make_ffnn(std::size_t input_dim, std::uint64_t seed, double dropout = kFfnnDropout,
                         std::size_t hidden1 = 10, std::size_t hidden2 = 46,
                         std::size_t outputs = kHorizon) {
    Rng rng(seed);
    Network net(input_dim, outputs);
    net.add(std::make_unique<BatchNorm>(input_dim));
    net.add(std::make_unique<Dense>(input_dim, hidden1, rng));
    net.add(std::make_unique<BatchNorm>(hidden1));
    net.add(std::make_unique<LeakyReLU>());
    net.add(std::make_unique<Dropout>(dropout));
    net.add(std::make_unique<Dense>(hidden1, hidden2, rng));
    net.add(std::make_unique<BatchNorm>(hidden2));
    net.add(std::make_unique<LeakyReLU>());
    net.add(std::make_unique<Dropout>(dropout));
    net.add(std::make_unique<Dense>(hidden2, outputs, rng));
    return net;
}

// Input BatchNorm; one Gaussian RBF layer; linear output.
inline Network make_rbfnn(std::size_t input_dim, std::uint64_t seed, std::size_t units = kRbfUnits,
                          std::size_t outputs = kHorizon) {
    Rng rng(seed);
    Network net(input_dim, outputs);
    net.add(std::make_unique<BatchNorm>(input_dim));
    net.add(std::make_unique<RBF>(input_dim, units, rng));
    net.add(std::make_unique<Dense>(units, outputs, rng));
    return net;
}

struct Adam {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void step(const std::vector<Param>& params) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
                v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& g = *params[i].grad;
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * g;
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * g.cwiseProduct(g);
            params[i].value->array() -=
                learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + epsilon);
        }
    }

private:
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 1000;
    std::size_t patience = 20;
    double validation_fraction = 0.10;
    std::uint64_t seed = 0;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double validation_mse = 0.0;
};

struct TrainResult {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double initial_validation_mse = 0.0;
    double best_validation_mse = 0.0;
    std::vector<EpochLog> log;
};

inline constexpr std::size_t kMinTrainingRows = 10;

// Rows are chronological; the last validation_fraction of them is held out.
// Training stops once `patience` epochs pass without a strictly lower
// validation MSE and the parameters of the best epoch are restored.
inline TrainResult train(Network& net, const Matrix& X, const Matrix& Y, const TrainConfig& cfg) {
    if (X.rows() != Y.rows()) throw ValidationError("train: input and target row counts differ");
    if (static_cast<std::size_t>(X.rows()) < kMinTrainingRows) {
        throw FitError("train: need at least " + std::to_string(kMinTrainingRows) + " rows");
    }
    if (static_cast<std::size_t>(Y.cols()) != net.output_dim()) {
        throw ValidationError("train: target width does not match the network output");
    }
    const auto n = static_cast<std::size_t>(X.rows());
    std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 2);
    const std::size_t n_train = n - n_val;
    const Matrix Xv = X.bottomRows(static_cast<Eigen::Index>(n_val));
    const Matrix Yv = Y.bottomRows(static_cast<Eigen::Index>(n_val));

    Rng rng(cfg.seed);
    Adam adam;
    adam.learning_rate = cfg.learning_rate;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.epsilon = cfg.epsilon;
    const std::size_t batch = std::max<std::size_t>(2, cfg.batch_size);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.initial_validation_mse = mse_loss(net.infer(Xv), Yv);
    result.best_validation_mse = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best = net.snapshot();

    Matrix xb, yb;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n_train; start += batch) {
            std::size_t end = std::min(n_train, start + batch);
            // A trailing single row would leave batch statistics undefined.
            if (n_train - end == 1) end = n_train;
            const auto rows = static_cast<Eigen::Index>(end - start);
            xb.resize(rows, X.cols());
            yb.resize(rows, Y.cols());
            for (Eigen::Index r = 0; r < rows; ++r) {
                xb.row(r) = X.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]));
                yb.row(r) = Y.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]));
            }
            net.zero_grad();
            const Matrix pred = net.forward(xb, Mode::Train, rng);
            loss_sum += mse_loss(pred, yb) * static_cast<double>(rows);
            seen += static_cast<std::size_t>(rows);
            net.backward(mse_grad(pred, yb));
            adam.step(net.params());
            if (end == n_train) break;
        }
        const double val = mse_loss(net.infer(Xv), Yv);
        result.log.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1)), val});
        result.epochs_run = epoch;
        if (val < result.best_validation_mse) {
            result.best_validation_mse = val;
            result.best_epoch = epoch;
            best = net.snapshot();
        } else if (epoch - result.best_epoch >= cfg.patience) {
            break;
        }
    }
    net.restore(best);
    return result;
}

inline void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "epoch,train_mse,validation_mse\n";
    for (const auto& e : log) {
        out << e.epoch << ',' << ::dhf::detail::format_double(e.train_mse) << ','
            << ::dhf::detail::format_double(e.validation_mse) << '\n';
    }
}

// Lloyd's algorithm from k distinct random rows. Empty clusters keep their
// previous center.
inline Matrix kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t iterations = 100) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n == 0 || k == 0) throw FitError("kmeans: empty input");
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix C(static_cast<Eigen::Index>(k), X.cols());
    for (std::size_t j = 0; j < k; ++j) C.row(static_cast<Eigen::Index>(j)) = X.row(static_cast<Eigen::Index>(idx[j % n]));

    std::vector<std::size_t> assign(n, k);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (C.rowwise() - X.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
            if (assign[i] != static_cast<std::size_t>(best)) {
                assign[i] = static_cast<std::size_t>(best);
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sum = Matrix::Zero(C.rows(), C.cols());
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum.row(static_cast<Eigen::Index>(assign[i])) += X.row(static_cast<Eigen::Index>(i));
            ++count[assign[i]];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] > 0) C.row(static_cast<Eigen::Index>(j)) = sum.row(static_cast<Eigen::Index>(j)) / static_cast<double>(count[j]);
        }
    }
    return C;
}

inline double median_pairwise_distance(const Matrix& C) {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < C.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < C.rows(); ++j) d.push_back((C.row(i) - C.row(j)).norm());
    }
    if (d.empty()) return 1.0;
    std::sort(d.begin(), d.end());
    const double m = interpolated_quantile(d, 0.5);
    return m > 0.0 ? m : 1.0;
}

}  // namespace dhf::nn

namespace dhf {

// Lags (hours before the origin, 0 = the origin itself) fed to the networks.
inline const std::vector<std::size_t>& ffnn_past_indices() {
    static const std::vector<std::size_t> v{
        0,   1,   2,   6,   7,   8,   9,   11,  12,  17,  19,  20,  21,  22,  23,  25,  26,
        28,  29,  30,  32,  33,  35,  36,  37,  39,  40,  41,  42,  44,  46,  47,  48,  50,
        53,  54,  56,  59,  60,  62,  67,  69,  71,  74,  75,  77,  82,  84,  85,  86,  92,
        94,  97,  98,  100, 103, 105, 106, 107, 109, 110, 112, 114, 116, 117, 118, 119, 121,
        122, 125, 126, 127, 128, 129, 130, 131, 132, 134, 135, 136, 137, 139, 140, 142, 143};
    return v;
}

inline const std::vector<std::size_t>& rbfnn_past_indices() {
    static const std::vector<std::size_t> v{
        1,  2,  4,  5,  10, 14, 15, 19, 21, 23,  27,  28,  29,  41,  44,  45,  46,
        47, 48, 51, 56, 57, 58, 60, 65, 67, 72,  73,  75,  76,  79,  81,  86,  87,
        90, 91, 93, 96, 104, 112, 116, 121, 124, 128, 131, 132, 135, 139, 140, 142};
    return v;
}

inline constexpr std::size_t kNeuralHistory = 144;

struct InputSpec {
    std::vector<std::size_t> past_indices;
    bool weather = false;  // append weather_features(., FS3) at the origin hour

    std::size_t width() const { return past_indices.size() + (weather ? feature_count(FeatureSet::FS3) : 0); }

    void write_row(const HourlySeries& s, const WeatherRecord& w, std::size_t t, double* out) const {
        std::size_t c = 0;
        for (std::size_t lag : past_indices) out[c++] = s.values[t - lag];
        if (weather) write_weather_features(w, FeatureSet::FS3, out + c);
    }
};

inline InputSpec ffnn_input_spec() { return {ffnn_past_indices(), true}; }
inline InputSpec rbfnn_input_spec() { return {rbfnn_past_indices(), false}; }

struct NeuralOptions {
    nn::TrainConfig train;
    bool rbf_trainable = true;
    bool rbf_weather = false;
};

struct NeuralRows {
    nn::Matrix X, Y;
    std::vector<std::size_t> origins;
};

// One row per origin t with kNeuralHistory valid trailing readings and 72
// valid readings after it.
inline NeuralRows build_neural_rows(const CleanDataset& ds, std::string_view counter_id, const InputSpec& spec) {
    const HourlySeries& s = ds.counter(counter_id);
    const std::size_t n = s.size();
    std::vector<std::size_t> next_invalid(n + 1, n);
    for (std::size_t k = n; k-- > 0;) next_invalid[k] = s.is_valid(k) ? next_invalid[k + 1] : k;

    NeuralRows rows;
    for (std::size_t t = kNeuralHistory - 1; t + kHorizon < n; ++t) {
        if (next_invalid[t + 1 - kNeuralHistory] <= t + kHorizon) continue;
        rows.origins.push_back(t);
    }
    const auto m = static_cast<Eigen::Index>(rows.origins.size());
    rows.X.resize(m, static_cast<Eigen::Index>(spec.width()));
    rows.Y.resize(m, static_cast<Eigen::Index>(kHorizon));
    std::vector<double> buf(spec.width());
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t t = rows.origins[static_cast<std::size_t>(r)];
        spec.write_row(s, ds.weather.records[t], t, buf.data());
        for (std::size_t c = 0; c < buf.size(); ++c) rows.X(r, static_cast<Eigen::Index>(c)) = buf[c];
        for (std::size_t p = 1; p <= kHorizon; ++p) rows.Y(r, static_cast<Eigen::Index>(p - 1)) = s.values[t + p];
    }
    return rows;
}

class NeuralForecaster final : public TrainedForecaster {
public:
    NeuralForecaster(Algorithm algo, std::string counter_id, InputSpec spec, nn::Network net,
                     double target_mean, double target_scale)
        : TrainedForecaster(std::move(counter_id)),
          algo_(algo),
          spec_(std::move(spec)),
          net_(std::move(net)),
          target_mean_(target_mean),
          target_scale_(target_scale) {}

    Algorithm algorithm() const override { return algo_; }
    std::size_t warmup_hours() const override { return kNeuralHistory; }

    ForecastWindow predict(const ForecastInput& in) const override {
        const std::size_t t = in.origin_index();
        if (!trailing_window_valid(in.history, t, kNeuralHistory)) {
            throw WarmupError("network forecast needs " + std::to_string(kNeuralHistory) +
                              " valid trailing hours");
        }
        const WeatherRecord* now = in.weather.find(in.origin);
        if (spec_.weather && now == nullptr) throw DataError("weather missing at the forecast origin");
        nn::Matrix x(1, static_cast<Eigen::Index>(spec_.width()));
        spec_.write_row(in.history, now ? *now : WeatherRecord{}, t, x.data());
        const nn::Matrix y = net_.infer(x);
        ForecastWindow out;
        out.origin = in.origin;
        for (std::size_t p = 0; p < kHorizon; ++p) {
            out.values[p] = std::max(0.0, target_mean_ + target_scale_ * y(0, static_cast<Eigen::Index>(p)));
        }
        return out;
    }

    const nn::Network& network() const { return net_; }
    const InputSpec& input_spec() const { return spec_; }
    const nn::TrainResult& training() const { return training_; }
    void set_training(nn::TrainResult r) { training_ = std::move(r); }

    void save(ModelWriter& out) const override {
        std::vector<double> idx(spec_.past_indices.begin(), spec_.past_indices.end());
        out.numbers("nn.past_indices", idx);
        out.number("nn.weather", spec_.weather ? 1.0 : 0.0);
        out.number("nn.target_mean", target_mean_);
        out.number("nn.target_scale", target_scale_);
        nn::Network copy = net_;
        const auto state = copy.state();
        out.number("nn.state_count", static_cast<double>(state.size()));
        for (std::size_t i = 0; i < state.size(); ++i) {
            out.numbers("nn.state." + std::to_string(i),
                        std::span<const double>(state[i]->data(), static_cast<std::size_t>(state[i]->size())));
        }
    }

    static std::unique_ptr<NeuralForecaster> load(Algorithm algo, std::string counter_id, const ModelReader& in) {
        InputSpec spec;
        for (double v : in.numbers("nn.past_indices")) spec.past_indices.push_back(static_cast<std::size_t>(v));
        spec.weather = in.number("nn.weather") != 0.0;
        nn::Network net = algo == Algorithm::FFNN ? nn::make_ffnn(spec.width(), 0) : nn::make_rbfnn(spec.width(), 0);
        auto state = net.state();
        if (static_cast<std::size_t>(in.number("nn.state_count")) != state.size()) {
            throw DataError("network state count does not match the architecture");
        }
        for (std::size_t i = 0; i < state.size(); ++i) {
            const auto v = in.numbers("nn.state." + std::to_string(i), static_cast<std::size_t>(state[i]->size()));
            std::copy(v.begin(), v.end(), state[i]->data());
        }
        return std::make_unique<NeuralForecaster>(algo, std::move(counter_id), std::move(spec), std::move(net),
                                                  in.number("nn.target_mean"), in.number("nn.target_scale"));
    }

private:
    Algorithm algo_;
    InputSpec spec_;
    nn::Network net_;
    double target_mean_;
    double target_scale_;
    nn::TrainResult training_;
};

// Targets are standardized by their training mean and standard deviation;
// inputs are left to the network's input BatchNorm.
inline std::unique_ptr<NeuralForecaster> fit_neural(Algorithm algo, const CleanDataset& train,
                                                    std::string_view counter_id, const NeuralOptions& opts = {}) {
    if (algo != Algorithm::FFNN && algo != Algorithm::RBFNN) throw ValidationError("not a neural algorithm");
    InputSpec spec = algo == Algorithm::FFNN ? ffnn_input_spec() : rbfnn_input_spec();
    if (algo == Algorithm::RBFNN) spec.weather = opts.rbf_weather;
    NeuralRows rows = build_neural_rows(train, counter_id, spec);
    if (static_cast<std::size_t>(rows.X.rows()) < nn::kMinTrainingRows) {
        throw FitError("network training needs at least " + std::to_string(nn::kMinTrainingRows) +
                       " complete input windows");
    }
    const double mean = rows.Y.mean();
    double scale = std::sqrt((rows.Y.array() - mean).square().mean());
    if (!(scale > 0.0)) scale = 1.0;
    const nn::Matrix Yn = (rows.Y.array() - mean) / scale;

    const std::uint64_t seed = opts.train.seed;
    nn::Network net = algo == Algorithm::FFNN ? nn::make_ffnn(spec.width(), seed) : nn::make_rbfnn(spec.width(), seed);

    // Input BatchNorm starts from the data's statistics; RBF centers come from
    // k-means in that standardized space.
    auto& bn = dynamic_cast<nn::BatchNorm&>(*net.layers().front());
    const Eigen::RowVectorXd mu = rows.X.colwise().mean();
    const Eigen::RowVectorXd var = (rows.X.rowwise() - mu).array().square().colwise().mean();
    bn.running_mean = mu;
    bn.running_var = var;
    if (algo == Algorithm::RBFNN) {
        const nn::Matrix Xs = bn.infer(rows.X);
        auto& rbf = dynamic_cast<nn::RBF&>(*net.layers()[1]);
        rbf.centers = nn::kmeans(Xs, rbf.centers.rows(), seed);
        rbf.widths.setConstant(nn::median_pairwise_distance(rbf.centers));
        rbf.trainable = opts.rbf_trainable;
    }
    nn::TrainResult result = nn::train(net, rows.X, Yn, opts.train);
    auto f = std::make_unique<NeuralForecaster>(algo, std::string(counter_id), std::move(spec), std::move(net),
                                                mean, scale);
    f->set_training(std::move(result));
    return f;
}

}  // namespace dhf
