// Command-line front end.  Every subcommand rebuilds its inputs
// deterministically from (config, seed), so there is no hidden state between
// commands and identical invocations produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cupid/harness.hpp"
#include "cupid/io.hpp"

namespace fs = std::filesystem;
using cupid::ExperimentConfig;
using cupid::Task;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config's seed list")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig config =
        ExperimentConfig::from_json(cupid::load_json(args.config_path));
    if (args.seed_given) config.seeds = {args.seed};
    return config;
}

std::uint64_t first_seed(const ExperimentConfig& config) {
    return config.seeds.front();
}

std::string seed_tag(std::uint64_t seed) {
    return "seed" + std::to_string(seed);
}

void write_curve(const fs::path& path, const std::vector<double>& curve) {
    std::string out = "epoch,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out += std::to_string(i + 1) + "," + cupid::fmt17(curve[i]) + "\n";
    }
    cupid::write_text(path, out);
}

int cmd_gen_data(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    std::uint64_t seed = first_seed(config);
    fs::create_directories(args.out_dir);
    fs::path out(args.out_dir);

    if (config.is_regression()) {
        auto gen = config.task == Task::Toy1 ? cupid::gen_toy1 : cupid::gen_toy2;
        auto train = gen(config.data.n_per_region,
                         cupid::stream::derive(seed, cupid::stream::kTrainData),
                         config.data.density_ratio);
        auto test = gen(config.data.n_test_per_region,
                        cupid::stream::derive(seed, cupid::stream::kTestData),
                        config.data.density_ratio);
        cupid::write_regression_csv(out / ("train_" + seed_tag(seed) + ".csv"),
                                    train);
        cupid::write_regression_csv(out / ("test_" + seed_tag(seed) + ".csv"),
                                    test);
        return 0;
    }

    // Classification tasks carry labels (and the ood flag) per row; write the
    // already-split sets so downstream consumers see exactly what training saw.
    cupid::TensorDataset train, test;
    std::vector<cupid::ClassificationSample> ood;
    make_datasets(config, seed, train, test,
                  config.task == Task::Ood ? &ood : nullptr);
    auto rows = [&](const cupid::TensorDataset& d) {
        std::vector<cupid::ClassificationSample> v(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            v[i].features.resize(d.x.cols());
            for (std::size_t j = 0; j < d.x.cols(); ++j) {
                v[i].features[j] = d.x.at(i, j);
            }
            v[i].label = d.labels[i];
        }
        return v;
    };
    cupid::write_classification_csv(out / ("train_" + seed_tag(seed) + ".csv"),
                                    rows(train));
    cupid::write_classification_csv(out / ("test_" + seed_tag(seed) + ".csv"),
                                    rows(test));
    if (config.task == Task::Ood) {
        cupid::write_classification_csv(out / ("ood_" + seed_tag(seed) + ".csv"),
                                        ood);
    }
    return 0;
}

int cmd_train_base(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    std::uint64_t seed = first_seed(config);
    fs::create_directories(args.out_dir);
    fs::path out(args.out_dir);

    cupid::TensorDataset train, test;
    make_datasets(config, seed, train, test, nullptr);
    cupid::Mlp net = cupid::Mlp::build(
        config.model, cupid::stream::derive(seed, cupid::stream::kBaseInit));
    cupid::TrainHyper hyper{config.base.epochs, config.base.batch_size,
                            config.base.lr,
                            cupid::stream::derive(seed, cupid::stream::kBaseTrain)};
    auto curve = cupid::train_base(net, train, hyper);

    cupid::save_json(out / ("base_" + seed_tag(seed) + ".json"),
                     cupid::mlp_to_json(net, seed));
    write_curve(out / ("base_curve_" + seed_tag(seed) + ".csv"), curve);
    return 0;
}

int cmd_train_cupid(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    std::uint64_t seed = first_seed(config);
    fs::create_directories(args.out_dir);
    fs::path out(args.out_dir);

    cupid::SeedArtifacts art = cupid::train_pipeline(config, seed);
    cupid::save_json(out / ("base_" + seed_tag(seed) + ".json"),
                     cupid::mlp_to_json(art.base, seed));
    cupid::save_json(out / ("cupid_" + seed_tag(seed) + ".json"),
                     cupid::cupid_to_json(art.module, seed));
    write_curve(out / ("base_curve_" + seed_tag(seed) + ".csv"), art.base_curve);
    write_curve(out / ("cupid_curve_" + seed_tag(seed) + ".csv"),
                art.cupid_curve);
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    std::uint64_t seed = first_seed(config);
    fs::create_directories(args.out_dir);
    fs::path out(args.out_dir);

    cupid::SeedArtifacts art = cupid::train_pipeline(config, seed);
    auto records = cupid::eval_records(config, art);
    auto metrics = cupid::seed_metrics(config, art, records);
    cupid::write_records_csv(out / ("records_" + seed_tag(seed) + ".csv"),
                             records);
    cupid::write_metrics_csv(out / ("metrics_" + seed_tag(seed) + ".csv"),
                             metrics);
    return 0;
}

int cmd_run(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    cupid::Report report = cupid::run_experiment(config);
    cupid::write_report(report, args.out_dir);
    return 0;
}

int cmd_sweep(const CommonArgs& args, std::vector<std::size_t> layers) {
    ExperimentConfig config = load_config(args);
    if (layers.empty()) {
        for (std::size_t l = 1; l < config.model.layers(); ++l) {
            layers.push_back(l);
        }
    }
    auto rows = cupid::sweep_placement(config, layers);
    fs::create_directories(args.out_dir);
    cupid::write_sweep_csv(fs::path(args.out_dir) / "sweep.csv", rows);
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    auto variants = cupid::ablate(config);
    for (const auto& [name, report] : variants) {
        cupid::write_report(report, fs::path(args.out_dir) / name);
    }
    return 0;
}

int cmd_plot_data(const CommonArgs& args) {
    ExperimentConfig config = load_config(args);
    auto rows = cupid::emit_plotdata(config);
    fs::create_directories(args.out_dir);
    cupid::write_grid_csv(fs::path(args.out_dir) / "grid.csv", rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CUPID uncertainty laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::size_t> sweep_layers;

    CLI::App* gen = app.add_subcommand("gen-data", "write dataset CSVs");
    CLI::App* tb = app.add_subcommand("train-base", "train the host network");
    CLI::App* tc = app.add_subcommand("train-cupid",
                                      "train host + plug-in module");
    CLI::App* ev = app.add_subcommand("eval", "records + metrics for one seed");
    CLI::App* run = app.add_subcommand("run", "full multi-seed experiment");
    CLI::App* sweep = app.add_subcommand("sweep", "insertion-layer sweep");
    CLI::App* ablate = app.add_subcommand("ablate", "ablation variants");
    CLI::App* plot = app.add_subcommand("plot-data", "dense prediction grid");

    for (CLI::App* cmd : {gen, tb, tc, ev, run, sweep, ablate, plot}) {
        add_common(cmd, args);
    }
    sweep->add_option("--layers", sweep_layers,
                      "insertion layers to sweep (default: all valid)");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(args);
        if (tb->parsed()) return cmd_train_base(args);
        if (tc->parsed()) return cmd_train_cupid(args);
        if (ev->parsed()) return cmd_eval(args);
        if (run->parsed()) return cmd_run(args);
        if (sweep->parsed()) return cmd_sweep(args, sweep_layers);
        if (ablate->parsed()) return cmd_ablate(args);
        if (plot->parsed()) return cmd_plot_data(args);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::fprintf(stderr, "%s\n",
                     json{{"error", e.what()}}.dump().c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n",
                     json{{"error", e.what()}}.dump().c_str());
        return 1;
    }
}
