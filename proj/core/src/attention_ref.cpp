#include "cvmask/attention_ref.hpp"

#include "cvmask/error.hpp"

#include <json.hpp>

#include <cassert>
#include <cmath>
#include <random>

namespace cvmask {
namespace {

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    }
    return m;
}

Eigen::MatrixXd dense_mask(const AttentionMask& mask) {
    const auto n = static_cast<Eigen::Index>(mask.n());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < mask.n(); ++i) {
        for (std::uint32_t j : mask.row(i)) m(static_cast<Eigen::Index>(i), j) = 1.0;
    }
    return m;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        double total = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            p(i, j) = std::exp(logits(i, j) - top);
            total += p(i, j);
        }
        p.row(i) /= total;
    }
    return p;
}

// dL/dS for P = softmax(S) row-wise, given dL/dP.
Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& p, const Eigen::MatrixXd& dp) {
    Eigen::MatrixXd ds(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double dot = p.row(i).dot(dp.row(i));
        ds.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix());
    }
    return ds;
}

} // namespace

void ToyEncoderConfig::validate() const {
    if (layers < 1) throw Error(ErrorCode::ConfigError, "encoder needs at least one layer");
    if (model_dim < 2) throw Error(ErrorCode::ConfigError, "model_dim must be at least 2");
}

std::vector<bool> strategy_schedule(int layers, LayerStrategy strategy) {
    if (layers < 1) throw Error(ErrorCode::ConfigError, "layer count must be at least 1");
    std::vector<bool> schedule(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        schedule[static_cast<std::size_t>(l)] = strategy == LayerStrategy::All || l % 2 == 0;
    }
    return schedule;
}

ToyEncoder::ToyEncoder(ToyEncoderConfig config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const Eigen::Index d = config_.model_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < config_.layers; ++l) {
        Layer layer;
        layer.wq = gaussian_matrix(rng, d, d, scale);
        layer.wk = gaussian_matrix(rng, d, d, scale);
        layer.wv = gaussian_matrix(rng, d, d, scale);
        layer.wo = gaussian_matrix(rng, d, d, scale);
        layers_.push_back(std::move(layer));
    }
}

void ToyEncoder::check_shapes(const Eigen::MatrixXd& inputs, const AttentionMask* mask) const {
    if (inputs.cols() != config_.model_dim) {
        throw Error(ErrorCode::DimensionMismatch, "inputs have " + std::to_string(inputs.cols()) +
                                                      " columns, model_dim is " + std::to_string(config_.model_dim));
    }
    if (mask != nullptr && static_cast<Eigen::Index>(mask->n()) != inputs.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "mask is " + std::to_string(mask->n()) + "x" +
                                                      std::to_string(mask->n()) + " but there are " +
                                                      std::to_string(inputs.rows()) + " inputs");
    }
}

ForwardResult ToyEncoder::run(const Eigen::MatrixXd& inputs, const AttentionMask* mask,
                              std::vector<LayerCache>* caches) const {
    check_shapes(inputs, mask);
    const std::vector<bool> schedule = strategy_schedule(config_.layers, config_.layer_strategy);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.model_dim));
    Eigen::MatrixXd allowed;
    if (mask != nullptr) allowed = dense_mask(*mask);

    ForwardResult result;
    Eigen::MatrixXd x = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& w = layers_[l];
        LayerCache c;
        c.x = x;
        c.masked = mask != nullptr && schedule[l];
        c.q = x * w.wq;
        c.k = x * w.wk;
        c.v = x * w.wv;
        Eigen::MatrixXd logits = (c.q * c.k.transpose()) * inv_sqrt_d;
        if (c.masked && !config_.literal_hadamard) {
            for (Eigen::Index i = 0; i < logits.rows(); ++i) {
                for (Eigen::Index j = 0; j < logits.cols(); ++j) {
                    if (allowed(i, j) == 0.0) logits(i, j) = kMaskedLogit;
                }
                assert(allowed(i, i) != 0.0 && "every row keeps its diagonal");
            }
        }
        c.softmax = row_softmax(logits);
        c.attention = (c.masked && config_.literal_hadamard) ? Eigen::MatrixXd(c.softmax.cwiseProduct(allowed))
                                                             : c.softmax;
        c.h = c.attention * c.v;
        x = x + c.h * w.wo;
        result.trace.attention.push_back(c.attention);
        result.trace.mask_applied.push_back(c.masked);
        if (caches != nullptr) caches->push_back(std::move(c));
    }
    result.outputs = std::move(x);
    return result;
}

Eigen::MatrixXd ToyEncoder::backward(const std::vector<LayerCache>& caches, const AttentionMask* mask) const {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.model_dim));
    Eigen::MatrixXd allowed;
    if (mask != nullptr) allowed = dense_mask(*mask);

    Eigen::MatrixXd dy = Eigen::MatrixXd::Ones(caches.back().x.rows(), config_.model_dim);
    for (std::size_t l = caches.size(); l-- > 0;) {
        const Layer& w = layers_[l];
        const LayerCache& c = caches[l];
        Eigen::MatrixXd dx = dy;  // residual path
        const Eigen::MatrixXd dh = dy * w.wo.transpose();
        Eigen::MatrixXd dp = dh * c.v.transpose();
        const Eigen::MatrixXd dv = c.attention.transpose() * dh;
        if (c.masked && config_.literal_hadamard) dp = dp.cwiseProduct(allowed);
        const Eigen::MatrixXd ds = softmax_backward(c.softmax, dp) * inv_sqrt_d;
        const Eigen::MatrixXd dq = ds * c.k;
        const Eigen::MatrixXd dk = ds.transpose() * c.q;
        dx += dq * w.wq.transpose() + dk * w.wk.transpose() + dv * w.wv.transpose();
        dy = std::move(dx);
    }
    return dy;
}

ForwardResult ToyEncoder::forward(const Eigen::MatrixXd& inputs) const { return run(inputs, nullptr, nullptr); }

ForwardResult ToyEncoder::forward(const Eigen::MatrixXd& inputs, const AttentionMask& mask) const {
    return run(inputs, &mask, nullptr);
}

Eigen::MatrixXd ToyEncoder::input_gradient(const Eigen::MatrixXd& inputs) const {
    std::vector<LayerCache> caches;
    run(inputs, nullptr, &caches);
    return backward(caches, nullptr);
}

Eigen::MatrixXd ToyEncoder::input_gradient(const Eigen::MatrixXd& inputs, const AttentionMask& mask) const {
    std::vector<LayerCache> caches;
    run(inputs, &mask, &caches);
    return backward(caches, &mask);
}

double grad_check(const Eigen::MatrixXd& inputs, const AttentionMask& mask, const ToyEncoderConfig& config,
                  double step) {
    const ToyEncoder encoder(config);
    const Eigen::MatrixXd analytic = encoder.input_gradient(inputs, mask);
    double worst = 0.0;
    Eigen::MatrixXd probe = inputs;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
            const double saved = probe(i, j);
            probe(i, j) = saved + step;
            const double up = encoder.forward(probe, mask).outputs.sum();
            probe(i, j) = saved - step;
            const double down = encoder.forward(probe, mask).outputs.sum();
            probe(i, j) = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double scale = std::max({std::abs(analytic(i, j)), std::abs(numeric), 1e-12});
            worst = std::max(worst, std::abs(analytic(i, j) - numeric) / scale);
        }
    }
    return worst;
}

Eigen::MatrixXd random_inputs(std::size_t n, int model_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gaussian_matrix(rng, static_cast<Eigen::Index>(n), model_dim, 1.0);
}

std::string trace_to_json_string(const AttentionTrace& trace, const ToyEncoderConfig& config) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < trace.attention.size(); ++l) {
        const Eigen::MatrixXd& a = trace.attention[l];
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            std::vector<double> row(a.cols());
            for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
            rows.push_back(std::move(row));
        }
        layers.push_back({{"index", l}, {"mask_applied", static_cast<bool>(trace.mask_applied[l])}, {"attention", rows}});
    }
    const nlohmann::json doc = {
        {"layers", layers},
        {"strategy", layer_strategy_name(config.layer_strategy)},
        {"model_dim", config.model_dim},
        {"seed", config.seed},
        {"literal_hadamard", config.literal_hadamard},
    };
    return doc.dump(2);
}

} // namespace cvmask
