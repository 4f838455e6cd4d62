#include "glimmer/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include <json.hpp>

#include "glimmer/error.hpp"

namespace glimmer::nn {
namespace {

using nlohmann::json;

json arch_to_json(const ArchConfig& arch) {
    json conv = json::array();
    for (const auto& c : arch.conv_layers) conv.push_back({{"filters", c.filters}, {"kernel", c.kernel}});
    return {{"conv_layers", conv},
            {"lstm_units", arch.lstm_units},
            {"dense_hidden", arch.dense_hidden},
            {"output_len", arch.output_len},
            {"input_len", arch.input_len},
            {"input_features", arch.input_features}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig arch;
    arch.conv_layers.clear();
    for (const auto& c : j.at("conv_layers")) {
        arch.conv_layers.push_back({c.at("filters").get<std::size_t>(), c.at("kernel").get<std::size_t>()});
    }
    arch.lstm_units = j.at("lstm_units").get<std::size_t>();
    arch.dense_hidden = j.at("dense_hidden").get<std::size_t>();
    arch.output_len = j.at("output_len").get<std::size_t>();
    arch.input_len = j.at("input_len").get<std::size_t>();
    arch.input_features = j.at("input_features").get<std::size_t>();
    return arch;
}

template <typename Array>
Array fixed_array(const json& j) {
    Array out{};
    if (!j.is_array() || j.size() != out.size()) {
        throw CorruptCheckpointError("scaler arrays must have " + std::to_string(out.size()) + " entries");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = j[i].get<double>();
    return out;
}

}  // namespace

void save_params(const Checkpoint& ckpt, std::ostream& out) {
    const auto& p = ckpt.params;
    json params = json::array();
    for (const auto& block : p.layout().blocks()) {
        const auto values = p.values().subspan(block.offset, block.size);
        params.push_back({{"name", block.name},
                          {"shape", block.shape},
                          {"values", std::vector<double>(values.begin(), values.end())}});
    }
    const json doc = {
        {"format_version", kCheckpointFormatVersion},
        {"arch", arch_to_json(p.arch())},
        {"scaler", {{"mean", ckpt.scaler.mean}, {"std", ckpt.scaler.std}}},
        {"thresholds", {{"hypo", ckpt.thresholds.hypo}, {"hyper", ckpt.thresholds.hyper}}},
        {"training",
         {{"loss", ckpt.loss},
          {"w_hypo", ckpt.weights.hypo},
          {"w_normal", ckpt.weights.normal},
          {"w_hyper", ckpt.weights.hyper},
          {"seed", ckpt.seed}}},
        {"params", params},
    };
    out << doc.dump(1) << '\n';
}

void save_params(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
    save_params(ckpt, out);
    if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_params(std::istream& in, const std::optional<ArchConfig>& expected) {
    json doc;
    try {
        doc = json::parse(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } catch (const json::exception& e) {
        throw CorruptCheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
    }

    try {
        if (!doc.is_object() || !doc.contains("format_version")) {
            throw CorruptCheckpointError("checkpoint lacks format_version");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw VersionError("unsupported checkpoint format_version " + std::to_string(version));
        }

        ArchConfig arch;
        try {
            arch = arch_from_json(doc.at("arch"));
            arch.validate();
        } catch (const ShapeError& e) {
            throw CorruptCheckpointError(std::string("stored architecture is invalid: ") + e.what());
        }
        if (expected && !(*expected == arch)) {
            throw ShapeError("checkpoint architecture does not match the requested architecture");
        }

        const ParamLayout layout(arch);
        const auto& stored = doc.at("params");
        if (!stored.is_array() || stored.size() != layout.blocks().size()) {
            throw CorruptCheckpointError("checkpoint parameter list does not match its architecture");
        }
        std::vector<double> values;
        values.reserve(layout.total());
        for (std::size_t i = 0; i < stored.size(); ++i) {
            const auto& block = layout.blocks()[i];
            const auto& entry = stored[i];
            if (entry.at("name").get<std::string>() != block.name ||
                entry.at("shape").get<std::vector<std::size_t>>() != block.shape ||
                entry.at("values").size() != block.size) {
                throw CorruptCheckpointError("parameter block '" + block.name + "' is malformed");
            }
            for (const auto& v : entry.at("values")) values.push_back(v.get<double>());
        }

        Checkpoint ckpt{ModelParams(arch, std::move(values)), data::Scaler::identity(), data::Thresholds{}, "plain",
                        loss::LossWeights{}, 0};
        ckpt.scaler.mean = fixed_array<decltype(ckpt.scaler.mean)>(doc.at("scaler").at("mean"));
        ckpt.scaler.std = fixed_array<decltype(ckpt.scaler.std)>(doc.at("scaler").at("std"));
        ckpt.thresholds.hypo = doc.at("thresholds").at("hypo").get<double>();
        ckpt.thresholds.hyper = doc.at("thresholds").at("hyper").get<double>();
        const auto& training = doc.at("training");
        ckpt.loss = training.at("loss").get<std::string>();
        ckpt.weights = {training.at("w_hypo").get<double>(), training.at("w_normal").get<double>(),
                        training.at("w_hyper").get<double>()};
        ckpt.seed = training.at("seed").get<std::uint64_t>();
        return ckpt;
    } catch (const json::exception& e) {
        throw CorruptCheckpointError(std::string("checkpoint is incomplete: ") + e.what());
    }
}

Checkpoint load_params(const std::filesystem::path& path, const std::optional<ArchConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    return load_params(in, expected);
}

}  // namespace glimmer::nn
