#include "sspred/hlstm.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "sspred/errors.hpp"

namespace sspred {

double Hyperparams::lr_for(std::size_t layer) const {
    auto it = lr_overrides.find(layer);
    return it == lr_overrides.end() ? lr : it->second;
}

int Hyperparams::epochs_for(std::size_t layer) const {
    auto it = epoch_overrides.find(layer);
    return it == epoch_overrides.end() ? epochs : it->second;
}

void Hyperparams::validate() const {
    if (hidden_size < 1) throw ValidationError("hidden_size must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("lr must be positive");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (stack_depth != 1) {
        throw ValidationError("stack_depth " + std::to_string(stack_depth) +
                              " not supported; the model uses a single recurrent layer");
    }
    if (!(clip_norm > 0.0)) throw ValidationError("clip_norm must be positive");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    for (const auto& [j, v] : lr_overrides) {
        if (!(v > 0.0)) throw ValidationError("lr override for layer " + std::to_string(j) + " must be positive");
    }
    for (const auto& [j, v] : epoch_overrides) {
        if (v < 1) throw ValidationError("epoch override for layer " + std::to_string(j) + " must be >= 1");
    }
}

std::vector<LayerPairs> make_staggered_pairs(const Eigen::MatrixXd& normalized) {
    const Eigen::Index cols = normalized.cols();
    if (cols < 2) {
        throw WindowError("staggered pairs need at least 2 training months, got " + std::to_string(cols));
    }
    std::vector<LayerPairs> out;
    out.reserve(static_cast<std::size_t>(normalized.rows()));
    for (Eigen::Index j = 0; j < normalized.rows(); ++j) {
        out.push_back({normalized.row(j).head(cols - 1), normalized.row(j).tail(cols - 1).transpose()});
    }
    return out;
}

NormParams ModelBank::norm() const {
    NormParams p{Eigen::VectorXd(static_cast<Eigen::Index>(models.size())),
                 Eigen::VectorXd(static_cast<Eigen::Index>(models.size()))};
    for (std::size_t j = 0; j < models.size(); ++j) {
        p.min[static_cast<Eigen::Index>(j)] = models[j].norm_min;
        p.max[static_cast<Eigen::Index>(j)] = models[j].norm_max;
    }
    return p;
}

Eigen::MatrixXd ModelBank::normalized_training() const { return apply_norm(training, norm()); }

std::uint64_t layer_seed(std::uint64_t master, std::size_t layer) { return nn::derive_seed(master, layer); }

LayerModel train_layer(std::size_t j, const LayerPairs& pairs, const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    if (pairs.inputs.cols() < 1 || pairs.targets.size() != pairs.inputs.cols()) {
        throw DimensionError("layer " + std::to_string(j) + ": malformed training pairs");
    }
    LayerModel model;
    model.depth_index = j;
    model.seed = seed;
    model.net = nn::init_params(hp.hidden_size, pairs.inputs.rows(), seed);

    const double lr = hp.lr_for(j);
    const int epochs = hp.epochs_for(j);
    Eigen::VectorXd flat = model.net.flatten();
    nn::AdamMoments moments = nn::AdamMoments::zeros(flat.size());
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const nn::ForwardResult fwd = nn::forward_sequence(model.net, pairs.inputs);
        nn::BackwardResult bwd = nn::backward_sequence(fwd.tape, model.net, pairs.inputs, pairs.targets);
        Eigen::VectorXd grads = bwd.grads.flatten();
        if (!std::isfinite(bwd.loss) || !grads.allFinite()) {
            throw DivergenceError("layer " + std::to_string(j) + " diverged at epoch " + std::to_string(epoch));
        }
        nn::clip_global_norm(grads, hp.clip_norm);
        if (hp.optimizer == Optimizer::adam) {
            nn::adam_step(flat, grads, moments, lr, epoch);
        } else {
            nn::sgd_step(flat, grads, lr);
        }
        model.net.unflatten(flat);
    }
    model.epochs_run = epochs;
    model.final_loss = nn::sequence_loss(model.net, pairs.inputs, pairs.targets);
    if (!std::isfinite(model.final_loss)) {
        throw DivergenceError("layer " + std::to_string(j) + " diverged at epoch " + std::to_string(epochs));
    }
    return model;
}

ModelBank train_bank_on(const Eigen::MatrixXd& train, const DepthSchedule& sched, const WindowSpec& w,
                        const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    if (static_cast<std::size_t>(train.rows()) != sched.size()) {
        throw DimensionError("training matrix rows do not match the schedule");
    }
    const NormParams norm = fit_norm(train);
    const std::vector<LayerPairs> pairs = make_staggered_pairs(apply_norm(train, norm));

    const std::size_t layers = pairs.size();
    std::vector<LayerModel> models(layers);
    std::vector<std::exception_ptr> errors(layers);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < layers; j = next++) {
            try {
                models[j] = train_layer(j, pairs[j], hp, layer_seed(seed, j));
                models[j].norm_min = norm.min[static_cast<Eigen::Index>(j)];
                models[j].norm_max = norm.max[static_cast<Eigen::Index>(j)];
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::min<unsigned>(hp.workers, static_cast<unsigned>(layers));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return ModelBank{sched, w, hp, seed, std::move(models), train};
}

ModelBank train_bank(const LayeredSeries& series, const WindowSpec& w, const Hyperparams& hp, std::uint64_t seed) {
    return train_bank_on(split_train(series, w), series.schedule(), w, hp, seed);
}

Eigen::MatrixXd predict_multi_step(const ModelBank& bank, const Eigen::MatrixXd& normalized, int k) {
    if (k < 1) throw ValidationError("prediction steps must be >= 1");
    if (static_cast<std::size_t>(normalized.rows()) != bank.models.size() || normalized.cols() < 1) {
        throw DimensionError("normalized window has " + std::to_string(normalized.rows()) + " rows, bank has " +
                             std::to_string(bank.models.size()) + " layers");
    }
    Eigen::MatrixXd out(normalized.rows(), k);
    Eigen::VectorXd x(1);
    for (std::size_t j = 0; j < bank.models.size(); ++j) {
        const LayerModel& m = bank.models[j];
        const auto row = static_cast<Eigen::Index>(j);
        nn::LstmState state = nn::LstmState::zeros(m.net.lstm.hidden);
        double pred = 0.0;
        for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
            x[0] = normalized(row, c);
            pred = nn::predict_step(m.net, state, x);
        }
        out(row, 0) = pred;
        for (int step = 1; step < k; ++step) {
            x[0] = pred;
            pred = nn::predict_step(m.net, state, x);
            out(row, step) = pred;
        }
    }
    return denorm_matrix(out, bank.norm());
}

Eigen::MatrixXd predict_multi_step(const ModelBank& bank, int k) {
    return predict_multi_step(bank, bank.normalized_training(), k);
}

Eigen::VectorXd predict_one_step(const ModelBank& bank, const Eigen::MatrixXd& normalized) {
    return predict_multi_step(bank, normalized, 1).col(0);
}

Eigen::VectorXd predict_one_step(const ModelBank& bank) { return predict_one_step(bank, bank.normalized_training()); }

RetrainResult<ModelBank> retrain_until_stable(const LayeredSeries& series, const WindowSpec& w,
                                              const Hyperparams& hp, std::uint64_t seed, double delta,
                                              int max_rounds) {
    const TrainValidation tv = split_train_validation(series, w);
    auto round_seed = [seed](int round) {
        return round == 0 ? seed : nn::derive_seed(seed, 1'000'000ULL + static_cast<std::uint64_t>(round));
    };
    std::function<ModelBank(int)> train = [&](int round) {
        return train_bank_on(tv.train, series.schedule(), w, hp, round_seed(round));
    };
    std::function<double(const ModelBank&, int)> evaluate = [&](const ModelBank& bank, int) {
        const Eigen::VectorXd pred = predict_one_step(bank);
        return std::sqrt((pred - tv.validation).squaredNorm() / static_cast<double>(pred.size()));
    };
    return retrain_loop(train, evaluate, delta, max_rounds);
}

}  // namespace sspred
