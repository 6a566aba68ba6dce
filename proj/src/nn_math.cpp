#include "sspred/nn_math.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

#include "sspred/errors.hpp"

namespace sspred::nn {

namespace {

void check_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
    if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
    return a.unaryExpr([](double v) { return sspred::nn::sigmoid(v); });
}

}  // namespace

double sigmoid(double x) {
    // Split form avoids overflow in exp for large |x|.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

LstmParams LstmParams::zeros(Eigen::Index hidden, Eigen::Index input) {
    LstmParams p;
    p.hidden = hidden;
    p.input = input;
    for (auto* w : {&p.w_forget, &p.w_input, &p.w_cell, &p.w_output}) *w = Eigen::MatrixXd::Zero(hidden, hidden + input);
    for (auto* b : {&p.b_forget, &p.b_input, &p.b_cell, &p.b_output}) *b = Eigen::VectorXd::Zero(hidden);
    return p;
}

void LstmParams::validate() const {
    if (hidden < 1 || input < 1) throw DimensionError("LSTM needs hidden >= 1 and input >= 1");
    check_shape(w_forget, hidden, hidden + input, "W_f");
    check_shape(w_input, hidden, hidden + input, "W_i");
    check_shape(w_cell, hidden, hidden + input, "W_c");
    check_shape(w_output, hidden, hidden + input, "W_o");
    check_shape(b_forget, hidden, 1, "b_f");
    check_shape(b_input, hidden, 1, "b_i");
    check_shape(b_cell, hidden, 1, "b_c");
    check_shape(b_output, hidden, 1, "b_o");
}

DenseParams DenseParams::zeros(Eigen::Index hidden) { return {Eigen::RowVectorXd::Zero(hidden), 0.0}; }

Network Network::zeros(Eigen::Index hidden, Eigen::Index input) {
    return {LstmParams::zeros(hidden, input), DenseParams::zeros(hidden)};
}

std::array<BlockView, kBlockCount> blocks(Network& net) {
    auto& l = net.lstm;
    return {{
        {"W_f", l.w_forget.data(), l.w_forget.size()},
        {"W_i", l.w_input.data(), l.w_input.size()},
        {"W_c", l.w_cell.data(), l.w_cell.size()},
        {"W_o", l.w_output.data(), l.w_output.size()},
        {"b_f", l.b_forget.data(), l.b_forget.size()},
        {"b_i", l.b_input.data(), l.b_input.size()},
        {"b_c", l.b_cell.data(), l.b_cell.size()},
        {"b_o", l.b_output.data(), l.b_output.size()},
        {"dense_W", net.head.w.data(), net.head.w.size()},
        {"dense_b", &net.head.b, 1},
    }};
}

Eigen::Index Network::param_count() const {
    const Eigen::Index n = lstm.hidden;
    return 4 * n * (n + lstm.input) + 4 * n + n + 1;
}

Eigen::VectorXd Network::flatten() const {
    Eigen::VectorXd flat(param_count());
    Eigen::Index pos = 0;
    for (const BlockView& b : blocks(const_cast<Network&>(*this))) {
        flat.segment(pos, b.size) = Eigen::Map<const Eigen::VectorXd>(b.data, b.size);
        pos += b.size;
    }
    return flat;
}

void Network::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != param_count()) throw DimensionError("flat parameter vector has wrong length");
    Eigen::Index pos = 0;
    for (const BlockView& b : blocks(*this)) {
        Eigen::Map<Eigen::VectorXd>(b.data, b.size) = flat.segment(pos, b.size);
        pos += b.size;
    }
}

LstmState LstmState::zeros(Eigen::Index hidden) {
    return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

StepResult lstm_step(const LstmParams& p, const LstmState& state, const Eigen::VectorXd& x) {
    if (x.size() != p.input) {
        throw DimensionError("input has " + std::to_string(x.size()) + " features, LSTM expects " +
                             std::to_string(p.input));
    }
    if (state.h.size() != p.hidden || state.c.size() != p.hidden) throw DimensionError("state size mismatch");
    if (!x.allFinite()) throw ValidationError("non-finite LSTM input");

    TapeEntry e;
    e.concat.resize(p.hidden + p.input);
    e.concat << state.h, x;
    e.forget = sigmoid(Eigen::VectorXd(p.w_forget * e.concat + p.b_forget));
    e.input = sigmoid(Eigen::VectorXd(p.w_input * e.concat + p.b_input));
    e.candidate = (p.w_cell * e.concat + p.b_cell).array().tanh();
    e.output = sigmoid(Eigen::VectorXd(p.w_output * e.concat + p.b_output));
    e.c_prev = state.c;
    e.c = e.forget.cwiseProduct(state.c) + e.input.cwiseProduct(e.candidate);
    e.tanh_c = e.c.array().tanh();
    e.h = e.output.cwiseProduct(e.tanh_c);

    assert((e.forget.array() >= 0.0).all() && (e.forget.array() <= 1.0).all());
    assert((e.input.array() >= 0.0).all() && (e.input.array() <= 1.0).all());
    assert((e.output.array() >= 0.0).all() && (e.output.array() <= 1.0).all());
    assert((e.candidate.array().abs() <= 1.0).all());

    LstmState next{e.h, e.c};
    return {std::move(next), std::move(e)};
}

ForwardResult forward_sequence(const Network& net, const Eigen::MatrixXd& xs) {
    if (xs.cols() == 0) throw ValidationError("cannot run an empty sequence");
    ForwardResult out;
    out.predictions.resize(xs.cols());
    out.tape.reserve(static_cast<std::size_t>(xs.cols()));
    LstmState state = LstmState::zeros(net.lstm.hidden);
    for (Eigen::Index t = 0; t < xs.cols(); ++t) {
        StepResult r = lstm_step(net.lstm, state, xs.col(t));
        out.predictions[t] = net.head.w.dot(r.state.h) + net.head.b;
        state = std::move(r.state);
        out.tape.push_back(std::move(r.entry));
    }
    out.final_state = std::move(state);
    return out;
}

double predict_step(const Network& net, LstmState& state, const Eigen::VectorXd& x) {
    StepResult r = lstm_step(net.lstm, state, x);
    state = std::move(r.state);
    return net.head.w.dot(state.h) + net.head.b;
}

double mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
    if (predictions.size() != targets.size() || predictions.size() == 0) {
        throw DimensionError("mse needs equal, non-empty lengths");
    }
    return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

BackwardResult backward_sequence(const Tape& tape, const Network& net, const Eigen::MatrixXd& xs,
                                 const Eigen::VectorXd& targets) {
    const auto steps = static_cast<Eigen::Index>(tape.size());
    if (steps == 0 || xs.cols() != steps || targets.size() != steps) {
        throw DimensionError("tape, inputs and targets must have equal non-zero length");
    }
    const Eigen::Index n = net.lstm.hidden;
    const auto& p = net.lstm;

    BackwardResult out{0.0, Network::zeros(n, p.input)};
    auto& g = out.grads;
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(n);
    const double scale = 2.0 / static_cast<double>(steps);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const TapeEntry& e = tape[static_cast<std::size_t>(t)];
        const double pred = net.head.w.dot(e.h) + net.head.b;
        const double resid = pred - targets[t];
        out.loss += resid * resid;
        const double dpred = scale * resid;

        g.head.w += dpred * e.h.transpose();
        g.head.b += dpred;

        const Eigen::VectorXd dh = net.head.w.transpose() * dpred + dh_next;
        const Eigen::ArrayXd o = e.output.array();
        const Eigen::ArrayXd tc = e.tanh_c.array();
        const Eigen::ArrayXd dc = dh.array() * o * (1.0 - tc * tc) + dc_next.array();

        const Eigen::VectorXd da_o = (dh.array() * tc * o * (1.0 - o)).matrix();
        const Eigen::ArrayXd f = e.forget.array();
        const Eigen::VectorXd da_f = (dc * e.c_prev.array() * f * (1.0 - f)).matrix();
        const Eigen::ArrayXd i = e.input.array();
        const Eigen::ArrayXd cand = e.candidate.array();
        const Eigen::VectorXd da_i = (dc * cand * i * (1.0 - i)).matrix();
        const Eigen::VectorXd da_c = (dc * i * (1.0 - cand * cand)).matrix();

        g.lstm.w_forget.noalias() += da_f * e.concat.transpose();
        g.lstm.w_input.noalias() += da_i * e.concat.transpose();
        g.lstm.w_cell.noalias() += da_c * e.concat.transpose();
        g.lstm.w_output.noalias() += da_o * e.concat.transpose();
        g.lstm.b_forget += da_f;
        g.lstm.b_input += da_i;
        g.lstm.b_cell += da_c;
        g.lstm.b_output += da_o;

        Eigen::VectorXd dconcat = p.w_forget.transpose() * da_f;
        dconcat.noalias() += p.w_input.transpose() * da_i;
        dconcat.noalias() += p.w_cell.transpose() * da_c;
        dconcat.noalias() += p.w_output.transpose() * da_o;
        dh_next = dconcat.head(n);
        dc_next = (dc * f).matrix();
    }
    out.loss /= static_cast<double>(steps);
    return out;
}

double sequence_loss(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets) {
    if (targets.size() != xs.cols()) throw DimensionError("targets and inputs differ in length");
    LstmState state = LstmState::zeros(net.lstm.hidden);
    double sum = 0.0;
    for (Eigen::Index t = 0; t < xs.cols(); ++t) {
        const double r = predict_step(net, state, xs.col(t)) - targets[t];
        sum += r * r;
    }
    return sum / static_cast<double>(xs.cols());
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

double Rng::normal() {
    // Box-Muller; u1 kept away from 0.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 finalizer over a combination of both inputs.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Network init_params(Eigen::Index hidden, Eigen::Index input, std::uint64_t seed) {
    if (hidden < 1 || input < 1) throw ValidationError("hidden and input sizes must be >= 1");
    Network net = Network::zeros(hidden, input);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto fill = [&](double* data, Eigen::Index size) {
        for (Eigen::Index k = 0; k < size; ++k) data[k] = rng.uniform(-bound, bound);
    };
    auto& l = net.lstm;
    for (auto* w : {&l.w_forget, &l.w_input, &l.w_cell, &l.w_output}) fill(w->data(), w->size());
    fill(net.head.w.data(), net.head.w.size());
    l.b_forget.setOnes();
    return net;
}

AdamMoments AdamMoments::zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, AdamMoments& moments, double lr,
               long t, const AdamConfig& cfg) {
    if (params.size() != grads.size() || moments.m.size() != grads.size() || moments.v.size() != grads.size()) {
        throw DimensionError("adam: parameter, gradient and moment lengths differ");
    }
    if (t < 1) throw ValidationError("adam: step counter must be >= 1");
    if (!grads.allFinite()) throw DivergenceError("adam: non-finite gradient at step " + std::to_string(t));

    moments.m = cfg.beta1 * moments.m + (1.0 - cfg.beta1) * grads;
    moments.v = cfg.beta2 * moments.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    params.array() -= lr * (moments.m.array() / c1) / ((moments.v.array() / c2).sqrt() + cfg.eps);
}

void sgd_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, double lr) {
    if (params.size() != grads.size()) throw DimensionError("sgd: parameter and gradient lengths differ");
    if (!grads.allFinite()) throw DivergenceError("sgd: non-finite gradient");
    params -= lr * grads;
}

double clip_global_norm(Eigen::Ref<Eigen::VectorXd> grads, double max_norm) {
    const double norm = grads.norm();
    if (norm > max_norm && max_norm > 0.0) grads *= max_norm / norm;
    return norm;
}

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& b : blocks) w = std::max(w, b.max_rel_error);
    return w;
}

GradCheckReport compare_gradients(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets,
                                  const Network& analytic, double eps) {
    Network probe = net;
    Network ana = analytic;
    auto probe_blocks = blocks(probe);
    auto ana_blocks = blocks(ana);
    GradCheckReport report;
    for (std::size_t b = 0; b < kBlockCount; ++b) {
        BlockError err{probe_blocks[b].name, 0.0};
        for (Eigen::Index k = 0; k < probe_blocks[b].size; ++k) {
            double& w = probe_blocks[b].data[k];
            const double saved = w;
            w = saved + eps;
            const double up = sequence_loss(probe, xs, targets);
            w = saved - eps;
            const double down = sequence_loss(probe, xs, targets);
            w = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = ana_blocks[b].data[k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            err.max_rel_error = std::max(err.max_rel_error, std::abs(a - numeric) / denom);
        }
        report.blocks.push_back(err);
    }
    return report;
}

GradCheckReport grad_check(const Network& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& targets,
                           double eps) {
    const ForwardResult fwd = forward_sequence(net, xs);
    const BackwardResult bwd = backward_sequence(fwd.tape, net, xs, targets);
    return compare_gradients(net, xs, targets, bwd.grads, eps);
}

}  // namespace sspred::nn
