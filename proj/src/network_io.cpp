#include "unilearn/network_io.hpp"

#include "unilearn/errors.hpp"

#include <fstream>

namespace unilearn {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
    json weights = json::array();
    json biases = json::array();
    for (const auto& l : net.layers()) {
        weights.push_back(l.weights);
        biases.push_back(l.bias);
    }
    return json{{"arch", net.arch()}, {"weights", std::move(weights)}, {"biases", std::move(biases)}};
}

Mlp mlp_from_json(const json& j) {
    try {
        auto arch = j.at("arch").get<std::vector<std::size_t>>();
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (!weights.is_array() || !biases.is_array() || weights.size() != biases.size())
            throw PreconditionError("network JSON: weights and biases must be arrays of equal length");
        std::vector<Layer> layers;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            Layer l;
            l.weights = weights[i].get<std::vector<double>>();
            l.bias = biases[i].get<std::vector<double>>();
            l.rows = l.bias.size();
            l.cols = i < arch.size() ? arch[i] : 0;
            layers.push_back(std::move(l));
        }
        return Mlp(std::move(arch), std::move(layers));
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("network JSON: ") + e.what());
    }
}

json exponent_to_json(Exponent e) {
    if (e.is_infinite())
        return "inf";
    return e.value();
}

Exponent exponent_from_json(const json& j) {
    if (j.is_string())
        return Exponent::parse(j.get<std::string>());
    if (j.is_number())
        return Exponent::finite(j.get<double>());
    throw PreconditionError("exponent must be a number or \"inf\"");
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PreconditionError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw PreconditionError(path.string() + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void save_mlp(const Mlp& net, const std::filesystem::path& path) { write_json_file(mlp_to_json(net), path); }

Mlp load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_json_file(path)); }

} // namespace unilearn
