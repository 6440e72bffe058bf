#include "cupid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cupid {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

json layer_to_json(const DenseLayer& l) {
    return json{{"weights", l.weight.data()},
                {"bias", l.bias.data()},
                {"in", l.weight.rows()},
                {"out", l.weight.cols()}};
}

DenseLayer layer_from_json(const json& j) {
    std::size_t in = j.at("in"), out = j.at("out");
    DenseLayer l{Tensor(Shape{in, out}, j.at("weights").get<std::vector<double>>()),
                 Tensor(Shape{out}, j.at("bias").get<std::vector<double>>())};
    return l;
}

}  // namespace

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_regression_csv(const std::filesystem::path& path,
                          const std::vector<RegressionSample>& samples) {
    std::string out = "x,y,region\n";
    for (const RegressionSample& s : samples) {
        out += fmt17(s.x) + "," + fmt17(s.y) + "," + std::to_string(s.region) + "\n";
    }
    write_text(path, out);
}

void write_classification_csv(const std::filesystem::path& path,
                              const std::vector<ClassificationSample>& samples) {
    if (samples.empty()) {
        write_text(path, "class,is_ood\n");
        return;
    }
    std::size_t dim = samples[0].features.size();
    std::string out;
    for (std::size_t j = 0; j < dim; ++j) out += "f" + std::to_string(j) + ",";
    out += "class,is_ood\n";
    for (const ClassificationSample& s : samples) {
        for (double f : s.features) out += fmt17(f) + ",";
        out += std::to_string(s.label) + "," + (s.is_ood ? "1" : "0") + "\n";
    }
    write_text(path, out);
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<UncertaintyRecord>& records) {
    std::size_t k = records.empty() ? 1 : records[0].y_hat.size();
    std::string out = "input_id,u_alea,u_epis,error";
    for (std::size_t j = 0; j < k; ++j) out += ",y_hat_" + std::to_string(j);
    out += "\n";
    for (const UncertaintyRecord& r : records) {
        out += std::to_string(r.input_id) + "," + fmt17(r.u_alea) + "," +
               fmt17(r.u_epis) + ",";
        if (r.error.has_value()) out += fmt17(*r.error);
        for (double v : r.y_hat) out += "," + fmt17(v);
        out += "\n";
    }
    write_text(path, out);
}

std::vector<UncertaintyRecord> read_records_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("records csv: missing header in " + path.string());
    }
    auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "input_id" || header[1] != "u_alea" ||
        header[2] != "u_epis" || header[3] != "error") {
        throw std::runtime_error("records csv: unexpected header in " + path.string());
    }
    std::size_t k = header.size() - 4;
    std::vector<UncertaintyRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4 + k) {
            throw std::runtime_error("records csv: bad row '" + line + "'");
        }
        UncertaintyRecord r;
        r.input_id = std::stoull(fields[0]);
        r.u_alea = std::stod(fields[1]);
        r.u_epis = std::stod(fields[2]);
        if (!fields[3].empty()) r.error = std::stod(fields[3]);
        for (std::size_t j = 0; j < k; ++j) r.y_hat.push_back(std::stod(fields[4 + j]));
        out.push_back(std::move(r));
    }
    return out;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricRow>& rows) {
    std::string out = "metric,value,n,params\n";
    for (const MetricRow& r : rows) {
        out += r.metric + "," + fmt17(r.value) + "," + std::to_string(r.n) + "," +
               r.params + "\n";
    }
    write_text(path, out);
}

nlohmann::json mlp_to_json(const Mlp& net, std::uint64_t seed) {
    const MlpSpec& spec = net.spec();
    json jspec;
    jspec["widths"] = spec.widths;
    std::vector<std::string> acts;
    for (Activation a : spec.activations) acts.emplace_back(activation_name(a));
    jspec["activations"] = acts;
    jspec["dropouts"] = spec.dropouts;
    jspec["head"] = spec.head == Head::Regression ? "regression" : "classification";

    json layers = json::array();
    for (const DenseLayer& l : net.layers()) layers.push_back(layer_to_json(l));
    return json{{"spec", jspec}, {"seed", seed}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    const json& jspec = j.at("spec");
    MlpSpec spec;
    spec.widths = jspec.at("widths").get<std::vector<std::size_t>>();
    for (const auto& name : jspec.at("activations")) {
        spec.activations.push_back(activation_from_name(name.get<std::string>()));
    }
    spec.dropouts = jspec.at("dropouts").get<std::vector<double>>();
    std::string head = jspec.at("head");
    if (head != "regression" && head != "classification") {
        throw std::runtime_error("checkpoint: unknown head '" + head + "'");
    }
    spec.head = head == "regression" ? Head::Regression : Head::Classification;

    Mlp net = Mlp::build(spec, j.at("seed").get<std::uint64_t>());
    const json& layers = j.at("layers");
    if (layers.size() != net.layers().size()) {
        throw std::runtime_error("checkpoint: layer count mismatch");
    }
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        DenseLayer l = layer_from_json(layers[i]);
        if (l.weight.shape() != net.layers()[i].weight.shape()) {
            throw std::runtime_error("checkpoint: layer " + std::to_string(i) +
                                     " shape mismatch");
        }
        net.layers()[i] = std::move(l);
    }
    return net;
}

nlohmann::json cupid_to_json(const CupidModule& module, std::uint64_t seed) {
    auto group = [](const std::vector<DenseLayer>& layers) {
        json out = json::array();
        for (const DenseLayer& l : layers) out.push_back(layer_to_json(l));
        return out;
    };
    return json{{"d", module.feature_width()},
                {"k", module.output_dim()},
                {"trunk_depth", module.trunk_depth()},
                {"insertion_layer", module.insertion()},
                {"host_activation", activation_name(module.host_activation())},
                {"seed", seed},
                {"omega", json{{"trunk", group(module.trunk())},
                               {"recon", group(module.recon())},
                               {"unc", group(module.unc())}}}};
}

CupidModule cupid_from_json(const nlohmann::json& j) {
    CupidModule module = CupidModule::build(
        j.at("d").get<std::size_t>(), j.at("k").get<std::size_t>(),
        j.at("trunk_depth").get<std::size_t>(),
        activation_from_name(j.at("host_activation").get<std::string>()),
        j.at("insertion_layer").get<std::size_t>(),
        j.at("seed").get<std::uint64_t>());
    auto load_group = [](const json& src, std::vector<DenseLayer>& dst,
                         const char* name) {
        if (src.size() != dst.size()) {
            throw std::runtime_error(std::string("checkpoint: ") + name +
                                     " layer count mismatch");
        }
        for (std::size_t i = 0; i < dst.size(); ++i) {
            DenseLayer l = layer_from_json(src[i]);
            if (l.weight.shape() != dst[i].weight.shape()) {
                throw std::runtime_error(std::string("checkpoint: ") + name +
                                         " shape mismatch");
            }
            dst[i] = std::move(l);
        }
    };
    const json& omega = j.at("omega");
    load_group(omega.at("trunk"), module.trunk(), "trunk");
    load_group(omega.at("recon"), module.recon(), "recon");
    load_group(omega.at("unc"), module.unc(), "unc");
    return module;
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

nlohmann::json load_json(const std::filesystem::path& path) {
    return nlohmann::json::parse(read_text(path));
}

}  // namespace cupid
