#include "cupid/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace cupid {

using nlohmann::json;

const char* task_name(Task t) {
    switch (t) {
        case Task::Toy1: return "toy1";
        case Task::Toy2: return "toy2";
        case Task::Tabular: return "tabular";
        case Task::Misclass: return "misclass";
        case Task::Ood: return "ood";
    }
    return "?";
}

Task task_from_name(const std::string& name) {
    if (name == "toy1") return Task::Toy1;
    if (name == "toy2") return Task::Toy2;
    if (name == "tabular") return Task::Tabular;
    if (name == "misclass") return Task::Misclass;
    if (name == "ood") return Task::Ood;
    throw ShapeError("unknown task '" + name + "'");
}

namespace stream {
std::uint64_t derive(std::uint64_t seed, std::uint64_t which) {
    // One keyed splitmix step; collisions across (seed, which) pairs are as
    // unlikely as hash collisions.
    std::uint64_t z = seed + which * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace stream

ExperimentConfig ExperimentConfig::defaults(Task task) {
    ExperimentConfig c;
    c.task = task;
    switch (task) {
        case Task::Toy1:
        case Task::Toy2:
            c.model = MlpSpec::dense({1, 64, 64, 1}, Activation::Sigmoid,
                                     Head::Regression);
            c.insertion_layer = 2;
            c.base = {50, 16, 1e-3};
            c.cupid = {50, 8, 1e-3};
            c.lambda1 = 1e-3;
            c.lambda2 = 1e-2;
            c.data.n_per_region = 1000;
            c.data.n_test_per_region = 300;
            break;
        case Task::Tabular:
            c.model = MlpSpec::dense({10, 64, 64, 64, 7}, Activation::Sigmoid,
                                     Head::Classification, 0.1);
            c.insertion_layer = 3;
            c.base = {50, 256, 1e-3};
            c.cupid = {50, 256, 1e-4};
            c.lambda1 = 1e-3;
            c.lambda2 = 1e-2;
            c.data.classes = 7;
            c.data.n_per_class = 300;
            c.data.dim = 10;
            c.data.spread = 0.9;
            break;
        case Task::Misclass:
            c.model = MlpSpec::dense({2, 32, 32, 3}, Activation::Sigmoid,
                                     Head::Classification);
            c.insertion_layer = 2;
            c.base = {50, 32, 1e-3};
            c.cupid = {50, 16, 1e-3};
            c.lambda1 = 1e-2;
            c.lambda2 = 9e-3;
            c.data.classes = 3;
            c.data.n_per_class = 400;
            c.data.dim = 2;
            c.data.spread = 0.55;
            c.data.label_noise = 0.1;
            break;
        case Task::Ood:
            // Label noise and dropout keep the classifier soft far from the
            // blobs, so the reconstruction gap stays visible in probability
            // space; a deeper trunk and larger lambda1 sharpen the gap.
            c.model = MlpSpec::dense({2, 64, 64, 3}, Activation::Sigmoid,
                                     Head::Classification, 0.1);
            c.insertion_layer = 2;
            c.trunk_depth = 3;
            c.base = {50, 32, 1e-3};
            c.cupid = {150, 16, 1e-3};
            c.lambda1 = 5e-2;
            c.lambda2 = 9e-3;
            c.data.classes = 3;
            c.data.n_per_class = 400;
            c.data.dim = 2;
            c.data.spread = 0.5;
            c.data.label_noise = 0.1;
            c.data.ood_shift = 5.0;
            break;
    }
    return c;
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_phase(const json& j, const char* key, PhaseHyper& out) {
    if (!j.contains(key)) return;
    const json& p = j.at(key);
    maybe(p, "epochs", out.epochs);
    maybe(p, "batch_size", out.batch_size);
    maybe(p, "lr", out.lr);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.contains("task")) throw ShapeError("config: missing 'task'");
    ExperimentConfig c = defaults(task_from_name(j.at("task").get<std::string>()));

    if (j.contains("model")) {
        const json& m = j.at("model");
        std::vector<std::size_t> widths = c.model.widths;
        maybe(m, "widths", widths);
        Activation hidden = c.model.activations.empty()
                                ? Activation::Sigmoid
                                : c.model.activations.front();
        if (m.contains("activation")) {
            hidden = activation_from_name(m.at("activation").get<std::string>());
        }
        double rate = 0.0;
        if (!c.model.dropouts.empty()) {
            rate = *std::max_element(c.model.dropouts.begin(),
                                     c.model.dropouts.end());
        }
        maybe(m, "dropout", rate);
        c.model = MlpSpec::dense(widths, hidden, c.model.head, rate);
        if (m.contains("activations")) {
            c.model.activations.clear();
            for (const auto& a : m.at("activations")) {
                c.model.activations.push_back(
                    activation_from_name(a.get<std::string>()));
            }
        }
        if (m.contains("dropouts")) {
            c.model.dropouts = m.at("dropouts").get<std::vector<double>>();
        }
    }

    maybe(j, "insertion_layer", c.insertion_layer);
    maybe(j, "trunk_depth", c.trunk_depth);
    parse_phase(j, "base", c.base);
    parse_phase(j, "cupid", c.cupid);
    maybe(j, "lambda1", c.lambda1);
    maybe(j, "lambda2", c.lambda2);
    maybe(j, "seeds", c.seeds);
    maybe(j, "mc_passes", c.mc_passes);

    if (j.contains("ablations")) {
        const json& a = j.at("ablations");
        maybe(a, "no_max", c.ablations.no_max);
        maybe(a, "separate_branches", c.ablations.separate_branches);
        maybe(a, "mc_dropout_baseline", c.ablations.mc_dropout_baseline);
    }

    if (j.contains("data")) {
        const json& d = j.at("data");
        maybe(d, "n_per_region", c.data.n_per_region);
        maybe(d, "n_test_per_region", c.data.n_test_per_region);
        maybe(d, "density_ratio", c.data.density_ratio);
        maybe(d, "classes", c.data.classes);
        maybe(d, "n_per_class", c.data.n_per_class);
        maybe(d, "dim", c.data.dim);
        maybe(d, "spread", c.data.spread);
        maybe(d, "label_noise", c.data.label_noise);
        maybe(d, "ood_shift", c.data.ood_shift);
    }

    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json m;
    m["widths"] = model.widths;
    std::vector<std::string> acts;
    for (Activation a : model.activations) acts.emplace_back(activation_name(a));
    m["activations"] = acts;
    m["dropouts"] = model.dropouts;

    json d;
    if (is_regression()) {
        d["n_per_region"] = data.n_per_region;
        d["n_test_per_region"] = data.n_test_per_region;
        d["density_ratio"] = data.density_ratio;
    } else {
        d["classes"] = data.classes;
        d["n_per_class"] = data.n_per_class;
        d["dim"] = data.dim;
        d["spread"] = data.spread;
        d["label_noise"] = data.label_noise;
        if (task == Task::Ood) d["ood_shift"] = data.ood_shift;
    }

    return json{
        {"task", task_name(task)},
        {"model", m},
        {"insertion_layer", insertion_layer},
        {"trunk_depth", trunk_depth},
        {"base", json{{"epochs", base.epochs},
                      {"batch_size", base.batch_size},
                      {"lr", base.lr}}},
        {"cupid", json{{"epochs", cupid.epochs},
                       {"batch_size", cupid.batch_size},
                       {"lr", cupid.lr}}},
        {"lambda1", lambda1},
        {"lambda2", lambda2},
        {"seeds", seeds},
        {"mc_passes", mc_passes},
        {"ablations", json{{"no_max", ablations.no_max},
                           {"separate_branches", ablations.separate_branches},
                           {"mc_dropout_baseline", ablations.mc_dropout_baseline}}},
        {"data", d},
    };
}

void ExperimentConfig::validate() const {
    model.validate();
    std::size_t L = model.layers();
    if (insertion_layer < 1 || insertion_layer >= L) {
        throw ShapeError("config: insertion layer " +
                         std::to_string(insertion_layer) + " outside [1," +
                         std::to_string(L) + ")");
    }
    if (trunk_depth == 0) throw ShapeError("config: zero trunk depth");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
        throw ShapeError("config: lambda1 and lambda2 must be positive");
    }
    if (seeds.empty()) throw ShapeError("config: no seeds");
    if (base.epochs == 0 || cupid.epochs == 0 || base.batch_size == 0 ||
        cupid.batch_size == 0 || base.lr <= 0.0 || cupid.lr <= 0.0) {
        throw ShapeError("config: bad training hyperparameters");
    }

    std::size_t in = is_regression() ? 1 : data.dim;
    std::size_t out = is_regression() ? 1 : data.classes;
    if (model.widths.front() != in || model.widths.back() != out) {
        throw ShapeError("config: model is " +
                         std::to_string(model.widths.front()) + "->" +
                         std::to_string(model.widths.back()) + ", task wants " +
                         std::to_string(in) + "->" + std::to_string(out));
    }
    Head want = is_regression() ? Head::Regression : Head::Classification;
    if (model.head != want) throw ShapeError("config: head does not fit task");
    if (ablations.mc_dropout_baseline && !model.has_dropout()) {
        throw ShapeError("config: MC-dropout baseline needs dropout layers");
    }
    if (ablations.mc_dropout_baseline && mc_passes < 2) {
        throw ShapeError("config: MC-dropout baseline needs >= 2 passes");
    }
}

std::uint64_t ExperimentConfig::config_hash() const {
    std::string dump = to_json().dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

namespace {

// Fixed affine standardization of the 1-D tasks, chosen once from the
// generator supports so the sigmoid network sees inputs near [-1, 1] (raw
// x in [5, 14] saturates every first-layer unit and the fit stalls).  All
// user-facing outputs are mapped back to raw units.
struct TaskScale {
    double x_center = 0.0, x_scale = 1.0;
    double y_center = 0.0, y_scale = 1.0;
};

TaskScale task_scale(Task task) {
    switch (task) {
        case Task::Toy1: return {9.5, 4.5, 5.5, 3.0};
        case Task::Toy2: return {9.0, 4.0, 1.5, 3.0};
        default: return {};  // blob features are already O(1) around 0
    }
}

TensorDataset regression_tensors(const std::vector<RegressionSample>& samples,
                                 const TaskScale& sc) {
    TensorDataset d;
    std::size_t n = samples.size();
    d.x = Tensor(Shape{n, 1});
    d.y = Tensor(Shape{n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        d.x[i] = (samples[i].x - sc.x_center) / sc.x_scale;
        d.y[i] = (samples[i].y - sc.y_center) / sc.y_scale;
    }
    return d;
}

TensorDataset classification_tensors(
    const std::vector<ClassificationSample>& samples, std::size_t classes) {
    TensorDataset d;
    std::size_t n = samples.size();
    std::size_t dim = n == 0 ? 0 : samples[0].features.size();
    d.x = Tensor(Shape{n, dim});
    d.y = Tensor(Shape{n, classes});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) d.x[i * dim + j] = samples[i].features[j];
        d.y[i * classes + static_cast<std::size_t>(samples[i].label)] = 1.0;
        d.labels.push_back(samples[i].label);
    }
    return d;
}

}  // namespace

void make_datasets(const ExperimentConfig& config, std::uint64_t seed,
                   TensorDataset& train, TensorDataset& test,
                   std::vector<ClassificationSample>* ood) {
    const DataConfig& dc = config.data;
    switch (config.task) {
        case Task::Toy1:
        case Task::Toy2: {
            auto gen = config.task == Task::Toy1 ? gen_toy1 : gen_toy2;
            TaskScale sc = task_scale(config.task);
            train = regression_tensors(gen(dc.n_per_region,
                                           stream::derive(seed, stream::kTrainData),
                                           dc.density_ratio),
                                       sc);
            test = regression_tensors(gen(dc.n_test_per_region,
                                          stream::derive(seed, stream::kTestData),
                                          dc.density_ratio),
                                      sc);
            return;
        }
        case Task::Tabular:
        case Task::Misclass:
        case Task::Ood: {
            auto all = gen_blobs(dc.classes, dc.n_per_class, dc.dim, dc.spread,
                                 stream::derive(seed, stream::kTrainData));
            // 80/20 split on a seeded shuffle.  Label noise goes into the
            // training portion only: it is an aleatoric corruption the model
            // learns under, while the held-out labels stay clean so that
            // "misclassified" keeps a ground truth to be measured against.
            std::vector<std::size_t> order(all.size());
            std::iota(order.begin(), order.end(), 0);
            Rng split_rng =
                Rng(stream::derive(seed, stream::kSplit)).derive(0x5411);
            split_rng.shuffle(order);
            std::size_t n_train = all.size() * 8 / 10;
            std::vector<ClassificationSample> train_s, test_s;
            for (std::size_t i = 0; i < order.size(); ++i) {
                (i < n_train ? train_s : test_s).push_back(all[order[i]]);
            }
            inject_label_noise(train_s, dc.classes, dc.label_noise,
                               stream::derive(seed, stream::kLabelNoise));
            train = classification_tensors(train_s, dc.classes);
            test = classification_tensors(test_s, dc.classes);
            if (config.task == Task::Ood && ood != nullptr) {
                // Match the test set size, rounded up to whole classes.
                std::size_t per_class =
                    (test_s.size() + dc.classes - 1) / dc.classes;
                *ood = gen_ood_shift(dc.classes, per_class, dc.dim, dc.spread,
                                     dc.ood_shift,
                                     stream::derive(seed, stream::kOodData));
            }
            return;
        }
    }
}

SeedArtifacts train_pipeline(const ExperimentConfig& config, std::uint64_t seed,
                             BranchMode mode) {
    config.validate();
    SeedArtifacts art;
    art.seed = seed;
    make_datasets(config, seed, art.train, art.test,
                  config.task == Task::Ood ? &art.ood : nullptr);

    art.base = Mlp::build(config.model, stream::derive(seed, stream::kBaseInit));
    TrainHyper bh{config.base.epochs, config.base.batch_size, config.base.lr,
                  stream::derive(seed, stream::kBaseTrain)};
    art.base_curve = train_base(art.base, art.train, bh);

    SplitNetwork split(art.base, config.insertion_layer);
    std::uint64_t theta_before = split.theta_hash();

    art.module = CupidModule::build(
        split.feature_width(), split.output_dim(), config.trunk_depth,
        split.insertion_activation(), config.insertion_layer,
        stream::derive(seed, stream::kCupidInit));
    CupidTrainHyper ch{config.cupid.epochs, config.cupid.batch_size,
                       config.cupid.lr,
                       stream::derive(seed, stream::kCupidTrain),
                       config.lambda1, config.lambda2, config.ablations.no_max};
    art.cupid_curve = train_cupid(split, art.module, art.train, ch, mode);

    if (split.theta_hash() != theta_before ||
        art.base.param_hash() != theta_before) {
        throw std::logic_error("train_pipeline: base network parameters moved "
                               "during module training");
    }
    art.split_layer = config.insertion_layer;
    return art;
}

// Map model-space scores of one regression record back to raw target units:
// deviations scale linearly, the learned variance quadratically.
static void rescale_record(UncertaintyRecord& r, const TaskScale& sc) {
    r.u_alea *= sc.y_scale * sc.y_scale;
    r.u_epis *= sc.y_scale;
    if (r.error.has_value()) *r.error *= sc.y_scale;
    for (double& v : r.y_hat) v = sc.y_center + sc.y_scale * v;
    for (double& v : r.y_hat_prime) v = sc.y_center + sc.y_scale * v;
}

std::vector<UncertaintyRecord> eval_records(const ExperimentConfig& config,
                                            const SeedArtifacts& art) {
    SplitNetwork split = art.split();
    if (config.is_regression()) {
        auto records = estimate(split, art.module, art.test.x, art.test.y);
        TaskScale sc = task_scale(config.task);
        for (UncertaintyRecord& r : records) rescale_record(r, sc);
        return records;
    }
    auto records = estimate(split, art.module, art.test.x, art.test.labels);
    if (config.task == Task::Ood) {
        TensorDataset oodd = classification_tensors(art.ood, config.data.classes);
        auto extra = estimate(split, art.module, oodd.x);
        std::size_t offset = records.size();
        for (UncertaintyRecord& r : extra) {
            r.input_id += offset;
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::vector<UncertaintyRecord> eval_with_shift(const ExperimentConfig& config,
                                               const SeedArtifacts& art,
                                               double magnitude) {
    if (config.task != Task::Ood) {
        throw ShapeError("eval_with_shift: ood task only");
    }
    SplitNetwork split = art.split();
    auto records = estimate(split, art.module, art.test.x, art.test.labels);
    std::size_t per_class =
        (art.test.size() + config.data.classes - 1) / config.data.classes;
    auto ood = gen_ood_shift(config.data.classes, per_class, config.data.dim,
                             config.data.spread, magnitude,
                             stream::derive(art.seed, stream::kOodData));
    TensorDataset oodd = classification_tensors(ood, config.data.classes);
    auto extra = estimate(split, art.module, oodd.x);
    std::size_t offset = records.size();
    for (UncertaintyRecord& r : extra) {
        r.input_id += offset;
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

double record_score(const UncertaintyRecord& r, const std::string& score) {
    if (score == "u_alea") return r.u_alea;
    if (score == "u_epis") return r.u_epis;
    throw ShapeError("unknown score type " + score);
}

MetricRow guarded(const std::string& metric, const std::string& params,
                  std::size_t n, const std::function<double()>& fn) {
    MetricRow row{metric, 0.0, n, params};
    try {
        row.value = fn();
    } catch (const std::exception&) {
        // Degenerate input (for example zero-variance scores); record the
        // metric as undefined rather than killing the seed.
        row.value = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

}  // namespace

std::vector<MetricRow> seed_metrics(const ExperimentConfig& config,
                                    const SeedArtifacts& art,
                                    const std::vector<UncertaintyRecord>& records) {
    std::vector<MetricRow> rows;
    std::vector<std::string> scores = {"u_alea", "u_epis"};

    auto add_scored = [&](const std::string& score,
                          const std::vector<double>& values) {
        std::size_t n = records.size();
        std::string params = "score=" + score;
        if (config.task == Task::Ood) {
            std::size_t n_id = art.test.size();
            std::vector<ScoredSample> s(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = {values[i], i >= n_id ? 1 : 0, 0.0};
            }
            params += ";positive=ood";
            rows.push_back(guarded("roc_auc", params, n, [&] { return roc_auc(s); }));
            rows.push_back(guarded("aupr", params, n, [&] { return aupr(s); }));
            return;
        }
        std::vector<double> errs(n);
        std::vector<ScoredSample> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            errs[i] = records[i].error.value_or(0.0);
            s[i] = {values[i], errs[i] > 0.0 ? 1 : 0, errs[i]};
        }
        if (config.is_regression()) {
            rows.push_back(guarded("pearson", params, n, [&] {
                return pearson(values, errs);
            }));
            rows.push_back(guarded("ause", params, n, [&] { return ause(s); }));
            rows.push_back(guarded("uce", params, n, [&] { return uce(s); }));
        } else {
            params += ";positive=misclassified";
            rows.push_back(guarded("roc_auc", params, n, [&] { return roc_auc(s); }));
            rows.push_back(guarded("aurc", params, n, [&] { return aurc(s); }));
            rows.push_back(guarded("spearman", params, n, [&] {
                return spearman(values, errs);
            }));
        }
    };

    for (const std::string& score : scores) {
        std::vector<double> values(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            values[i] = record_score(records[i], score);
        }
        add_scored(score, values);
    }

    if (config.ablations.mc_dropout_baseline) {
        Tensor x = art.test.x;
        if (config.task == Task::Ood) {
            // Score test + shifted rows, mirroring the record layout.
            TensorDataset oodd = classification_tensors(art.ood, config.data.classes);
            Tensor both(Shape{records.size(), x.cols()});
            for (std::size_t i = 0; i < x.size(); ++i) both[i] = x[i];
            for (std::size_t i = 0; i < oodd.x.size(); ++i) {
                both[x.size() + i] = oodd.x[i];
            }
            x = both;
        }
        auto values =
            mc_dropout_estimate(art.base, x, config.mc_passes,
                                stream::derive(art.seed, stream::kMcDropout));
        add_scored("mc_dropout", values);
    }

    return rows;
}

Report run_experiment(const ExperimentConfig& config) {
    config.validate();
    Report report;
    report.config = config;
    for (std::uint64_t seed : config.seeds) {
        SeedResult res;
        res.seed = seed;
        try {
            if (config.ablations.separate_branches) {
                // Each branch trained alone, the other left at initialization;
                // scores merge into one record set (u_alea from the aleatoric
                // module, u_epis and reconstruction from the epistemic one).
                SeedArtifacts alea_art =
                    train_pipeline(config, seed, BranchMode::AleaOnly);
                SeedArtifacts epis_art =
                    train_pipeline(config, seed, BranchMode::EpisOnly);
                auto alea_rec = eval_records(config, alea_art);
                auto epis_rec = eval_records(config, epis_art);
                for (std::size_t i = 0; i < epis_rec.size(); ++i) {
                    epis_rec[i].u_alea = alea_rec[i].u_alea;
                }
                res.records = std::move(epis_rec);
                res.metrics = seed_metrics(config, epis_art, res.records);
            } else {
                SeedArtifacts art = train_pipeline(config, seed);
                res.records = eval_records(config, art);
                res.metrics = seed_metrics(config, art, res.records);
            }
            res.ok = true;
        } catch (const NumericError& e) {
            res.ok = false;
            res.error = e.what();
        }
        report.seeds.push_back(std::move(res));
    }

    // Aggregate finite values per (metric, params) in first-seen order.
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<double>> buckets;
    for (const SeedResult& res : report.seeds) {
        if (!res.ok) continue;
        for (const MetricRow& row : res.metrics) {
            auto key = std::make_pair(row.metric, row.params);
            if (!buckets.count(key)) keys.push_back(key);
            if (std::isfinite(row.value)) buckets[key].push_back(row.value);
            else buckets[key];  // keep the key even if every seed was NaN
        }
    }
    for (const auto& key : keys) {
        const std::vector<double>& vals = buckets[key];
        SummaryRow row;
        row.metric = key.first;
        row.params = key.second;
        row.n_seeds = vals.size();
        if (vals.empty()) {
            row.mean = std::numeric_limits<double>::quiet_NaN();
        } else {
            row.mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                       static_cast<double>(vals.size());
            if (vals.size() >= 2) {
                double ss = 0.0;
                for (double v : vals) ss += (v - row.mean) * (v - row.mean);
                row.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
            }
        }
        report.summary.push_back(std::move(row));
    }
    return report;
}

std::vector<SweepRow> sweep_placement(const ExperimentConfig& config,
                                      const std::vector<std::size_t>& layers) {
    if (layers.empty()) throw ShapeError("sweep: no layers given");
    std::vector<SweepRow> rows;
    for (std::size_t layer : layers) {
        ExperimentConfig c = config;
        c.insertion_layer = layer;
        Report rep = run_experiment(c);
        for (const SummaryRow& s : rep.summary) {
            rows.push_back(SweepRow{layer, s});
        }
    }
    return rows;
}

std::map<std::string, Report> ablate(const ExperimentConfig& config) {
    std::map<std::string, Report> out;
    ExperimentConfig plain = config;
    plain.ablations = AblationFlags{};
    out.emplace("default", run_experiment(plain));

    if (config.ablations.no_max) {
        ExperimentConfig c = plain;
        c.ablations.no_max = true;
        out.emplace("no_max", run_experiment(c));
    }
    if (config.ablations.separate_branches) {
        ExperimentConfig c = plain;
        c.ablations.separate_branches = true;
        out.emplace("separate", run_experiment(c));
    }
    if (config.ablations.mc_dropout_baseline) {
        ExperimentConfig c = plain;
        c.ablations.mc_dropout_baseline = true;
        out.emplace("mc_dropout", run_experiment(c));
    }
    if (out.size() == 1) {
        throw ShapeError("ablate: no ablation flags set in config");
    }
    return out;
}

std::vector<GridRow> emit_plotdata(const ExperimentConfig& config) {
    if (!config.is_regression()) {
        throw ShapeError("plot grid: only the 1-D regression tasks");
    }
    SeedArtifacts art = train_pipeline(config, config.seeds.front());
    TaskScale sc = task_scale(config.task);
    constexpr std::size_t kPoints = 1001;  // [4.5, 14.5] step 0.01
    Tensor x(Shape{kPoints, 1});
    std::vector<double> raw(kPoints);
    for (std::size_t i = 0; i < kPoints; ++i) {
        raw[i] = 4.5 + 0.01 * static_cast<double>(i);
        x[i] = (raw[i] - sc.x_center) / sc.x_scale;
    }
    auto records = estimate(art.split(), art.module, x);
    std::vector<GridRow> rows(kPoints);
    for (std::size_t i = 0; i < kPoints; ++i) {
        rescale_record(records[i], sc);
        rows[i] = {raw[i], records[i].y_hat[0], records[i].u_alea,
                   records[i].u_epis};
    }
    return rows;
}

void write_report(const Report& report, const std::filesystem::path& outdir) {
    std::filesystem::create_directories(outdir);

    for (const SeedResult& res : report.seeds) {
        if (!res.ok) continue;
        write_records_csv(
            outdir / ("records_seed" + std::to_string(res.seed) + ".csv"),
            res.records);
    }

    std::string per_seed = "seed,status,metric,value,n,params\n";
    for (const SeedResult& res : report.seeds) {
        if (!res.ok) {
            per_seed += std::to_string(res.seed) + ",failed,,,,\n";
            continue;
        }
        for (const MetricRow& row : res.metrics) {
            per_seed += std::to_string(res.seed) + ",ok," + row.metric + "," +
                        fmt17(row.value) + "," + std::to_string(row.n) + "," +
                        row.params + "\n";
        }
    }
    write_text(outdir / "report_per_seed.csv", per_seed);

    std::string summary = "metric,mean,std,n_seeds,params\n";
    for (const SummaryRow& row : report.summary) {
        summary += row.metric + "," + fmt17(row.mean) + ",";
        if (row.stddev.has_value()) summary += fmt17(*row.stddev);
        summary += "," + std::to_string(row.n_seeds) + "," + row.params + "\n";
    }
    write_text(outdir / "report_summary.csv", summary);

    json meta{{"version", kVersion},
              {"config", report.config.to_json()},
              {"config_hash", report.config.config_hash()}};
    json failed = json::array();
    for (const SeedResult& res : report.seeds) {
        if (!res.ok) failed.push_back(json{{"seed", res.seed}, {"error", res.error}});
    }
    meta["failed_seeds"] = failed;
    save_json(outdir / "report.json", meta);
}

void write_grid_csv(const std::filesystem::path& path,
                    const std::vector<GridRow>& rows) {
    std::string out = "x,y_hat,u_alea,u_epis\n";
    for (const GridRow& r : rows) {
        out += fmt17(r.x) + "," + fmt17(r.y_hat) + "," + fmt17(r.u_alea) + "," +
               fmt17(r.u_epis) + "\n";
    }
    write_text(path, out);
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows) {
    std::string out = "layer,metric,mean,std,n_seeds,params\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.layer) + "," + r.summary.metric + "," +
               fmt17(r.summary.mean) + ",";
        if (r.summary.stddev.has_value()) out += fmt17(*r.summary.stddev);
        out += "," + std::to_string(r.summary.n_seeds) + "," + r.summary.params +
               "\n";
    }
    write_text(path, out);
}

}  // namespace cupid
