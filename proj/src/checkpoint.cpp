#include "sspred/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <map>
#include <string>
#include <type_traits>

#include "sspred/errors.hpp"
#include "sspred/kvfile.hpp"

namespace sspred {

namespace {

constexpr const char* kBankFormat = "sspred-bank/1";
constexpr const char* kLayerFormat = "sspred-layer/1";

std::string optimizer_name(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "sgd") return Optimizer::sgd;
    throw ValidationError("unknown optimizer '" + s + "'");
}

template <class Map>
std::string join_overrides(const Map& m) {
    std::string s;
    for (const auto& [j, v] : m) {
        if (!s.empty()) s += ',';
        s += std::to_string(j) + ':';
        if constexpr (std::is_same_v<typename Map::mapped_type, double>) {
            s += exact_double(v);
        } else {
            s += std::to_string(v);
        }
    }
    return s;
}

template <class V>
std::map<std::size_t, V> parse_overrides(const std::string& text, const std::string& what) {
    std::map<std::size_t, V> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError("malformed " + what + " entry '" + item + "'");
        const auto j = static_cast<std::size_t>(parse_u64(item.substr(0, colon), what));
        if constexpr (std::is_same_v<V, double>) {
            out[j] = parse_double(item.substr(colon + 1), what);
        } else {
            out[j] = static_cast<V>(parse_int(item.substr(colon + 1), what));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void read_block(const KeyValues& kv, const std::string& key, double* data, Eigen::Index size,
                const std::string& source) {
    const std::vector<double> v = parse_double_list(require(kv, key, source), source + " " + key);
    if (static_cast<Eigen::Index>(v.size()) != size) {
        throw DimensionError(source + ": block " + key + " has " + std::to_string(v.size()) + " values, expected " +
                             std::to_string(size));
    }
    std::copy(v.begin(), v.end(), data);
}

}  // namespace

std::string layer_file_name(std::size_t layer) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "layer_%03zu.model", layer);
    return buf;
}

void write_layer_model(std::ostream& out, const LayerModel& model, double depth_m,
                       const Eigen::RowVectorXd& training_row) {
    std::vector<std::pair<std::string, std::string>> e{
        {"format", kLayerFormat},
        {"depth_index", std::to_string(model.depth_index)},
        {"depth_m", exact_double(depth_m)},
        {"hidden", std::to_string(model.net.lstm.hidden)},
        {"input", std::to_string(model.net.lstm.input)},
        {"seed", std::to_string(model.seed)},
        {"epochs_run", std::to_string(model.epochs_run)},
        {"final_loss", exact_double(model.final_loss)},
        {"norm_min", exact_double(model.norm_min)},
        {"norm_max", exact_double(model.norm_max)},
        {"training", join_doubles(training_row.data(), static_cast<std::size_t>(training_row.size()))},
    };
    // Blocks are stored in Eigen's column-major order.
    nn::Network net = model.net;
    for (const nn::BlockView& b : nn::blocks(net)) {
        e.emplace_back(std::string(b.name), join_doubles(b.data, static_cast<std::size_t>(b.size)));
    }
    write_kv(out, e);
}

LoadedLayer read_layer_model(std::istream& in, const std::string& source) {
    const KeyValues kv = read_kv(in, source);
    if (require(kv, "format", source) != kLayerFormat) {
        throw ValidationError(source + ": unsupported format '" + kv.at("format") + "'");
    }
    LoadedLayer out;
    LayerModel& m = out.model;
    m.depth_index = static_cast<std::size_t>(parse_u64(require(kv, "depth_index", source), "depth_index"));
    out.depth_m = parse_double(require(kv, "depth_m", source), "depth_m");
    const auto hidden = parse_int(require(kv, "hidden", source), "hidden");
    const auto input = parse_int(require(kv, "input", source), "input");
    if (hidden < 1 || input < 1) throw ValidationError(source + ": hidden and input must be >= 1");
    m.seed = parse_u64(require(kv, "seed", source), "seed");
    m.epochs_run = static_cast<int>(parse_int(require(kv, "epochs_run", source), "epochs_run"));
    m.final_loss = parse_double(require(kv, "final_loss", source), "final_loss");
    m.norm_min = parse_double(require(kv, "norm_min", source), "norm_min");
    m.norm_max = parse_double(require(kv, "norm_max", source), "norm_max");
    const std::vector<double> row = parse_double_list(require(kv, "training", source), "training");
    out.training_row = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));

    m.net = nn::Network::zeros(hidden, input);
    for (const nn::BlockView& b : nn::blocks(m.net)) read_block(kv, std::string(b.name), b.data, b.size, source);
    m.net.lstm.validate();
    return out;
}

void save_bank(const std::filesystem::path& dir, const ModelBank& bank) {
    std::filesystem::create_directories(dir);
    std::string layer_seeds;
    std::vector<double> losses;
    for (const LayerModel& m : bank.models) {
        if (!layer_seeds.empty()) layer_seeds += ',';
        layer_seeds += std::to_string(m.seed);
        losses.push_back(m.final_loss);
    }
    const auto& hp = bank.hp;
    std::vector<std::pair<std::string, std::string>> e{
        {"format", kBankFormat},
        {"levels", std::to_string(bank.schedule.size())},
        {"schedule", join_doubles(bank.schedule.levels().data(), bank.schedule.size())},
        {"cycle_length", std::to_string(bank.window.cycle_length)},
        {"n_cycles", std::to_string(bank.window.n_cycles)},
        {"target", bank.window.target.str()},
        {"train_start", bank.window.first_train_month().str()},
        {"train_end", bank.window.last_train_month().str()},
        {"hidden_size", std::to_string(hp.hidden_size)},
        {"lr", exact_double(hp.lr)},
        {"epochs", std::to_string(hp.epochs)},
        {"stack_depth", std::to_string(hp.stack_depth)},
        {"lr_overrides", join_overrides(hp.lr_overrides)},
        {"epoch_overrides", join_overrides(hp.epoch_overrides)},
        {"optimizer", optimizer_name(hp.optimizer)},
        {"clip_norm", exact_double(hp.clip_norm)},
        {"master_seed", std::to_string(bank.master_seed)},
        {"layer_seeds", layer_seeds},
        {"final_losses", join_doubles(losses.data(), losses.size())},
    };
    {
        std::ofstream out(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + (dir / "manifest.txt").string());
        write_kv(out, e);
    }
    for (std::size_t j = 0; j < bank.models.size(); ++j) {
        const auto path = dir / layer_file_name(j);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + path.string());
        write_layer_model(out, bank.models[j], bank.schedule[j], bank.training.row(static_cast<Eigen::Index>(j)));
    }
}

ModelBank load_bank(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.txt";
    const std::string src = manifest_path.string();
    const KeyValues kv = read_kv(manifest_path);
    if (require(kv, "format", src) != kBankFormat) {
        throw ValidationError(src + ": unsupported format '" + kv.at("format") + "'");
    }
    DepthSchedule sched = DepthSchedule::custom(parse_double_list(require(kv, "schedule", src), "schedule"));
    if (parse_u64(require(kv, "levels", src), "levels") != sched.size()) {
        throw ValidationError(src + ": level count does not match schedule");
    }
    WindowSpec w;
    w.cycle_length = static_cast<int>(parse_int(require(kv, "cycle_length", src), "cycle_length"));
    w.n_cycles = static_cast<int>(parse_int(require(kv, "n_cycles", src), "n_cycles"));
    w.target = Month::parse(require(kv, "target", src));

    Hyperparams hp;
    hp.hidden_size = static_cast<int>(parse_int(require(kv, "hidden_size", src), "hidden_size"));
    hp.lr = parse_double(require(kv, "lr", src), "lr");
    hp.epochs = static_cast<int>(parse_int(require(kv, "epochs", src), "epochs"));
    hp.stack_depth = static_cast<int>(parse_int(require(kv, "stack_depth", src), "stack_depth"));
    hp.lr_overrides = parse_overrides<double>(require(kv, "lr_overrides", src), "lr_overrides");
    hp.epoch_overrides = parse_overrides<int>(require(kv, "epoch_overrides", src), "epoch_overrides");
    hp.optimizer = parse_optimizer(require(kv, "optimizer", src));
    hp.clip_norm = parse_double(require(kv, "clip_norm", src), "clip_norm");
    const std::uint64_t master = parse_u64(require(kv, "master_seed", src), "master_seed");

    std::vector<LayerModel> models;
    Eigen::MatrixXd training(static_cast<Eigen::Index>(sched.size()), w.train_months());
    for (std::size_t j = 0; j < sched.size(); ++j) {
        const auto path = dir / layer_file_name(j);
        std::ifstream in(path);
        if (!in) throw ValidationError("missing layer file " + path.string());
        LoadedLayer layer = read_layer_model(in, path.string());
        if (layer.model.depth_index != j || layer.depth_m != sched[j]) {
            throw ValidationError(path.string() + ": layer does not match the manifest schedule");
        }
        if (layer.training_row.size() != training.cols()) {
            throw DimensionError(path.string() + ": training row length does not match the window");
        }
        training.row(static_cast<Eigen::Index>(j)) = layer.training_row;
        models.push_back(std::move(layer.model));
    }
    return ModelBank{std::move(sched), w, hp, master, std::move(models), std::move(training)};
}

}  // namespace sspred
