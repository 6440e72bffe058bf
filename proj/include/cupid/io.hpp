#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cupid/cupid_module.hpp"
#include "cupid/data.hpp"
#include "cupid/nn.hpp"
#include "cupid/uncertainty.hpp"

namespace cupid {

// 17 significant digits: enough for a double to round-trip exactly, short
// enough to keep the CSVs diffable.
std::string fmt17(double v);

// One row of a metrics CSV: metric,value,n,params.
struct MetricRow {
    std::string metric;
    double value = 0.0;
    std::size_t n = 0;
    std::string params;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Datasets.  Regression: x,y,region.  Classification: f0..fD,class,is_ood.
void write_regression_csv(const std::filesystem::path& path,
                          const std::vector<RegressionSample>& samples);
void write_classification_csv(const std::filesystem::path& path,
                              const std::vector<ClassificationSample>& samples);

// Uncertainty records: input_id,u_alea,u_epis,error,y_hat_0..y_hat_{k-1}.
// The error field is left empty when no ground truth was available.
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<UncertaintyRecord>& records);
std::vector<UncertaintyRecord> read_records_csv(const std::filesystem::path& path);

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricRow>& rows);

// Checkpoints.  JSON keeps doubles bit-exact, so save/load round-trips
// parameters and the architecture exactly.
nlohmann::json mlp_to_json(const Mlp& net, std::uint64_t seed);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json cupid_to_json(const CupidModule& module, std::uint64_t seed);
CupidModule cupid_from_json(const nlohmann::json& j);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace cupid
