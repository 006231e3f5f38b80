#pragma once

// Minimal single-head, multi-layer masked self-attention used to check how an
// attention mask is infused into an encoder. Not a model: no training.

#include "cvmask/maskgen.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace cvmask {

struct ToyEncoderConfig {
    int layers = 2;
    int model_dim = 8;
    LayerStrategy layer_strategy = LayerStrategy::All;
    std::uint64_t seed = 7;
    /// Multiply normalized attention by the mask without renormalizing,
    /// instead of masking logits before the softmax.
    bool literal_hadamard = false;

    void validate() const;
};

/// Which layers apply the mask: ALL -> every layer, ALTERNATE -> even indices.
std::vector<bool> strategy_schedule(int layers, LayerStrategy strategy);

struct AttentionTrace {
    std::vector<Eigen::MatrixXd> attention;  // realized N x N matrix per layer
    std::vector<bool> mask_applied;
};

struct ForwardResult {
    Eigen::MatrixXd outputs;
    AttentionTrace trace;
};

/// Logit value written at disallowed positions.
inline constexpr double kMaskedLogit = -1e9;

/// Per layer: Y = X + softmax(Q K^T / sqrt(d) with masked logits) V W_o,
/// with Q = X W_q, K = X W_k, V = X W_v. Weights are drawn from `seed`.
class ToyEncoder {
public:
    explicit ToyEncoder(ToyEncoderConfig config);

    [[nodiscard]] const ToyEncoderConfig& config() const noexcept { return config_; }

    /// Unmasked pass.
    [[nodiscard]] ForwardResult forward(const Eigen::MatrixXd& inputs) const;
    /// Throws Error{DimensionMismatch} if mask.n() != rows or columns != model_dim.
    [[nodiscard]] ForwardResult forward(const Eigen::MatrixXd& inputs, const AttentionMask& mask) const;

    /// d(sum of outputs)/d(inputs) by reverse-mode differentiation.
    [[nodiscard]] Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& inputs) const;
    [[nodiscard]] Eigen::MatrixXd input_gradient(const Eigen::MatrixXd& inputs, const AttentionMask& mask) const;

private:
    struct Layer {
        Eigen::MatrixXd wq, wk, wv, wo;
    };
    struct LayerCache {
        Eigen::MatrixXd x, q, k, v, softmax, attention, h;
        bool masked = false;
    };

    ForwardResult run(const Eigen::MatrixXd& inputs, const AttentionMask* mask,
                      std::vector<LayerCache>* caches) const;
    Eigen::MatrixXd backward(const std::vector<LayerCache>& caches, const AttentionMask* mask) const;
    void check_shapes(const Eigen::MatrixXd& inputs, const AttentionMask* mask) const;

    ToyEncoderConfig config_;
    std::vector<Layer> layers_;
};

/// Max elementwise relative error between the analytic input gradient and
/// central finite differences (step 1e-4) of loss = sum(outputs).
double grad_check(const Eigen::MatrixXd& inputs, const AttentionMask& mask, const ToyEncoderConfig& config,
                  double step = 1e-4);

/// Deterministic pseudo-random N x d input matrix.
Eigen::MatrixXd random_inputs(std::size_t n, int model_dim, std::uint64_t seed);

/// {"layers":[{"index":k,"mask_applied":b,"attention":[[...],...]}],"strategy":...}
std::string trace_to_json_string(const AttentionTrace& trace, const ToyEncoderConfig& config);

} // namespace cvmask
