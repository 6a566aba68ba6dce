#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sspred/nn_math.hpp"
#include "sspred/ssp_core.hpp"

namespace sspred {

enum class Optimizer { adam, sgd };

struct Hyperparams {
    int hidden_size = 128;
    double lr = 0.01;
    int epochs = 300;
    /// Number of recurrent layers. Only 1 is supported.
    int stack_depth = 1;
    /// Per-depth-layer learning rate and epoch overrides, keyed by layer index.
    std::map<std::size_t, double> lr_overrides;
    std::map<std::size_t, int> epoch_overrides;
    Optimizer optimizer = Optimizer::adam;
    double clip_norm = 5.0;
    /// Parallel layer trainings. Results do not depend on this value.
    unsigned workers = 1;

    double lr_for(std::size_t layer) const;
    int epochs_for(std::size_t layer) const;
    /// Throws ValidationError on non-positive values or unsupported stack depth.
    void validate() const;
};

/// Teacher-forced one-step pairs for one depth layer: inputs are months
/// 1..nC-1 of the normalized row, targets months 2..nC.
struct LayerPairs {
    Eigen::MatrixXd inputs;  // 1 x (nC - 1)
    Eigen::VectorXd targets;
};

std::vector<LayerPairs> make_staggered_pairs(const Eigen::MatrixXd& normalized);

struct LayerModel {
    std::size_t depth_index = 0;
    nn::Network net;
    double norm_min = 0.0;
    double norm_max = 0.0;
    double final_loss = 0.0;
    int epochs_run = 0;
    std::uint64_t seed = 0;
};

struct ModelBank {
    DepthSchedule schedule;
    WindowSpec window;
    Hyperparams hp;
    std::uint64_t master_seed = 0;
    std::vector<LayerModel> models;
    /// Raw training window (J x nC, m/s) used to fit the bank and to warm up predictions.
    Eigen::MatrixXd training;

    NormParams norm() const;
    Eigen::MatrixXd normalized_training() const;
};

std::uint64_t layer_seed(std::uint64_t master, std::size_t layer);

/// Full-sequence BPTT for hp.epochs_for(j) epochs. Throws DivergenceError
/// naming the layer and epoch when the loss becomes non-finite.
LayerModel train_layer(std::size_t j, const LayerPairs& pairs, const Hyperparams& hp, std::uint64_t seed);

/// Fits normalization on the raw training window `train`, then trains one
/// network per row. Layers may run in parallel; output order is layer order.
ModelBank train_bank_on(const Eigen::MatrixXd& train, const DepthSchedule& sched, const WindowSpec& w,
                        const Hyperparams& hp, std::uint64_t seed);
ModelBank train_bank(const LayeredSeries& series, const WindowSpec& w, const Hyperparams& hp, std::uint64_t seed);

/// Replays the whole normalized window through each layer's network and
/// returns the denormalized prediction for the month after it (m/s).
Eigen::VectorXd predict_one_step(const ModelBank& bank, const Eigen::MatrixXd& normalized);
Eigen::VectorXd predict_one_step(const ModelBank& bank);

/// Autoregressive rollout: each prediction is fed back as the next input.
/// Returns J x k in m/s; column 0 equals predict_one_step.
Eigen::MatrixXd predict_multi_step(const ModelBank& bank, const Eigen::MatrixXd& normalized, int k);
Eigen::MatrixXd predict_multi_step(const ModelBank& bank, int k);

template <class Model>
struct RetrainResult {
    Model best;
    std::vector<double> rmse_history;
    std::size_t best_round = 0;
    /// False when max_rounds ran out before the RMSE settled.
    bool converged = false;
};

/// Train/evaluate rounds until the relative RMSE change from the previous
/// round is <= delta. The first round counts as a change of 1.0, so delta >= 1
/// stops after one round. Keeps the round with the lowest RMSE.
template <class Model>
RetrainResult<Model> retrain_loop(const std::function<Model(int round)>& train,
                                  const std::function<double(const Model&, int round)>& evaluate, double delta,
                                  int max_rounds);

RetrainResult<ModelBank> retrain_until_stable(const LayeredSeries& series, const WindowSpec& w,
                                              const Hyperparams& hp, std::uint64_t seed, double delta = 0.05,
                                              int max_rounds = 5);

// ---------------------------------------------------------------------------

template <class Model>
RetrainResult<Model> retrain_loop(const std::function<Model(int round)>& train,
                                  const std::function<double(const Model&, int round)>& evaluate, double delta,
                                  int max_rounds) {
    if (max_rounds < 1) max_rounds = 1;
    std::vector<double> history;
    std::optional<Model> best;
    std::size_t best_round = 0;
    for (int round = 0; round < max_rounds; ++round) {
        Model m = train(round);
        const double rmse = evaluate(m, round);
        double change = 1.0;
        if (!history.empty()) {
            const double prev = history.back();
            change = prev == 0.0 ? (rmse == 0.0 ? 0.0 : 1.0) : std::abs(rmse - prev) / prev;
        }
        history.push_back(rmse);
        if (!best || rmse < history[best_round]) {
            best = std::move(m);
            best_round = history.size() - 1;
        }
        if (change <= delta) return {std::move(*best), std::move(history), best_round, true};
    }
    return {std::move(*best), std::move(history), best_round, false};
}

}  // namespace sspred
