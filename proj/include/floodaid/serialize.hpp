#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "floodaid/fairness.hpp"
#include "floodaid/model.hpp"
#include "floodaid/priority.hpp"
#include "floodaid/synthetic.hpp"
#include "floodaid/trainer.hpp"

namespace floodaid {

using Json = nlohmann::ordered_json;

// Every JSON document written by this library carries this version.
inline constexpr int kSchemaVersion = 1;

// {"schema_version": 1, "kind": kind}
Json json_document(std::string_view kind);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);
std::uint32_t crc32_of(std::string_view text);
std::string hex32(std::uint32_t v);
// CRC-32 of the compact dump of `config`, as 8 hex digits.
std::string config_hash(const Json& config);

Json to_json(const PerformanceReport& r);
Json to_json(const FairnessReport& r);
Json to_json(const RankShiftReport& r);
Json to_json(const StandardizationParams& p);
Json to_json(const ModelConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const SyntheticConfig& c);
Json to_json(const TrainingLog& log);

StandardizationParams standardization_from_json(const Json& j);
ModelConfig model_config_from_json(const Json& j);
TrainConfig train_config_from_json(const Json& j);

// Sidecar for a generated dataset: seed, full config, per-district layout
// with the injected offsets, fitted parents and substitution notes.
Json synthetic_manifest(const SyntheticConfig& config, const SyntheticResult& result,
                        const std::string& csv_name);

// Pretty-printed JSON written atomically enough for our purposes (write then
// rename); throws DataError when the path is not writable.
void write_json(const Json& doc, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
// Writes `contents` to `path`, DataError on failure.
void write_text(const std::string& contents, const std::filesystem::path& path);

// epoch,task_loss,adv_loss,total_loss,lr,adv_accuracy,seconds
void write_training_log_csv(const TrainingLog& log, const std::filesystem::path& path);

// Long-form plot data.
// epoch,variant,series,value
void append_training_curve(std::string& csv, const TrainingLog& log, std::string_view variant);
inline constexpr std::string_view kTrainingCurveHeader = "epoch,variant,series,value\n";
// district,region,model,mae,mean_prediction
void append_district_rows(std::string& csv, const FairnessReport& report, const Dataset& data,
                          std::string_view model);
inline constexpr std::string_view kDistrictHeader = "district,region,model,mae,mean_prediction\n";

// Checkpoint: `<stem>.json` manifest plus `<stem>.bin`, the tensors of
// FairModel::tensors() concatenated as little-endian IEEE doubles.
struct Checkpoint {
  FairModel model;
  TrainConfig config;
  std::vector<std::string> training_ids;
  std::string config_hash;
};

// Returns the manifest path.
std::filesystem::path save_checkpoint(FairModel& model, const TrainConfig& config,
                                      const std::vector<std::string>& training_ids,
                                      const std::filesystem::path& stem);
// Accepts either the manifest path or the stem. Size or CRC mismatches raise
// DataError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace floodaid
