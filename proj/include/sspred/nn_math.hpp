#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sspred::nn {

/// Gate weights act on the concatenation [h, x] (hidden first, then input),
/// so every W_* is hidden x (hidden + input).
struct LstmParams {
    Eigen::Index hidden = 0;
    Eigen::Index input = 0;
    Eigen::MatrixXd w_forget, w_input, w_cell, w_output;
    Eigen::VectorXd b_forget, b_input, b_cell, b_output;

    static LstmParams zeros(Eigen::Index hidden, Eigen::Index input);
    /// Throws DimensionError / ValidationError on inconsistent shapes or non-finite entries.
    void validate() const;
};

/// Linear output head: prediction = w . h + b.
struct DenseParams {
    Eigen::RowVectorXd w;
    double b = 0.0;

    static DenseParams zeros(Eigen::Index hidden);
};

/// One per-layer network: a single LSTM layer followed by the dense head.
/// Gradients use the same type.
struct Network {
    LstmParams lstm;
    DenseParams head;

    static Network zeros(Eigen::Index hidden, Eigen::Index input);

    Eigen::Index param_count() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
};

/// Contiguous view of one named parameter block of a Network.
struct BlockView {
    std::string_view name;
    double* data;
    Eigen::Index size;
};

inline constexpr std::size_t kBlockCount = 10;
std::array<BlockView, kBlockCount> blocks(Network& net);

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zeros(Eigen::Index hidden);
};

struct TapeEntry {
    Eigen::VectorXd concat;  // [h_{t-1}, x_t]
    Eigen::VectorXd forget, input, candidate, output;
    Eigen::VectorXd c_prev, c, tanh_c, h;
};
using Tape = std::vector<TapeEntry>;

struct StepResult {
    LstmState state;
    TapeEntry entry;
};

double sigmoid(double x);

StepResult lstm_step(const LstmParams& params, const LstmState& state, const Eigen::VectorXd& x);

struct ForwardResult {
    Eigen::VectorXd predictions;
    Tape tape;
    LstmState final_state;
};

/// `xs` is input x T; column t is the input at step t. State starts at zero.
ForwardResult forward_sequence(const Network& net, const Eigen::MatrixXd& xs);

/// Continues from `state` without recording a tape. Returns the prediction
/// after consuming `x` and updates `state`.
double predict_step(const Network& net, LstmState& state, const Eigen::VectorXd& x);

double mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

struct BackwardResult {
    double loss = 0.0;
    Network grads;
};

/// Exact gradients of the mean squared error over the whole sequence (BPTT).
BackwardResult backward_sequence(const Tape& tape, const Network& net, const Eigen::MatrixXd& xs,
                                 const Eigen::VectorXd& targets);

/// Loss only; forward pass without keeping the tape around.
double sequence_loss(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets);

/// Deterministic uniform doubles from a seed (mt19937_64 with a fixed
/// 53-bit mapping, so values do not depend on the standard library's distributions).
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    double uniform(double lo, double hi);
    double normal();

private:
    std::mt19937_64 engine_;
};

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Weights uniform in [-1/sqrt(N), 1/sqrt(N)], forget bias 1, other biases 0.
Network init_params(Eigen::Index hidden, Eigen::Index input, std::uint64_t seed);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamMoments {
    Eigen::VectorXd m;
    Eigen::VectorXd v;

    static AdamMoments zeros(Eigen::Index n);
};

/// One bias-corrected Adam update at step t (t >= 1).
/// Throws DivergenceError on non-finite gradients.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, AdamMoments& moments,
               double lr, long t, const AdamConfig& cfg = {});

void sgd_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, double lr);

/// Rescales `grads` in place so its L2 norm is at most `max_norm`. Returns the pre-clip norm.
double clip_global_norm(Eigen::Ref<Eigen::VectorXd> grads, double max_norm);

struct BlockError {
    std::string_view name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<BlockError> blocks;
    double worst() const;
};

/// Central differences against the supplied analytic gradients.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport compare_gradients(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets,
                                  const Network& analytic, double eps);

GradCheckReport grad_check(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets,
                           double eps = 1e-5);

}  // namespace sspred::nn
