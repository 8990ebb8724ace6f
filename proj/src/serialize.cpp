#include "floodaid/serialize.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "floodaid/errors.hpp"

namespace floodaid {

namespace fs = std::filesystem;

Json json_document(std::string_view kind) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  return j;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32_of(std::string_view text) {
  return crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::string config_hash(const Json& config) { return hex32(crc32_of(config.dump())); }

Json to_json(const PerformanceReport& r) {
  return Json{{"mse", r.mse}, {"mae", r.mae}, {"rmse", r.rmse}, {"r2", r.r2}};
}

Json to_json(const FairnessReport& r) {
  Json j{{"spd", r.spd},
         {"prediction_variance", r.prediction_variance},
         {"regional_gap", r.regional_gap},
         {"equal_opportunity", r.equal_opportunity},
         {"mae_std_across_districts", r.mae_std_across_districts}};
  j["per_district_mae"] = Json::object();
  for (const auto& [k, v] : r.per_district_mae) j["per_district_mae"][k] = v;
  j["per_district_mean_prediction"] = Json::object();
  for (const auto& [k, v] : r.per_district_mean_prediction) j["per_district_mean_prediction"][k] = v;
  return j;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const RankShiftReport& r) {
  return Json{{"n", r.n},
              {"pct_reranked", r.pct_reranked},
              {"pct_reranked_3plus", r.pct_reranked_3plus},
              {"score_correlation", r.score_correlation},
              {"rank_correlation", r.rank_correlation},
              {"mean_shift", r.mean_shift},
              {"mean_shift_haor", optional_number(r.mean_shift_haor)},
              {"mean_shift_high_poverty", optional_number(r.mean_shift_high_poverty)},
              {"top_tier_size", r.top_tier_size},
              {"entered_top_tier", r.entered_top_tier},
              {"left_top_tier", r.left_top_tier}};
}

Json to_json(const StandardizationParams& p) {
  Json j{{"features", Json::array()}, {"mean", p.mean}, {"sd", p.sd}};
  for (auto name : kFeatureNames) j["features"].push_back(name);
  return j;
}

StandardizationParams standardization_from_json(const Json& j) {
  StandardizationParams p;
  p.mean = j.at("mean").get<std::vector<double>>();
  p.sd = j.at("sd").get<std::vector<double>>();
  if (p.mean.size() != kNumFeatures || p.sd.size() != kNumFeatures) {
    throw DataError("standardization: expected " + std::to_string(kNumFeatures) + " features");
  }
  return p;
}

Json to_json(const ModelConfig& c) {
  return Json{{"input_dim", c.input_dim},
              {"encoder_widths", c.encoder_widths},
              {"task_hidden", c.task_hidden},
              {"adversary_hidden", c.adversary_hidden},
              {"num_groups", c.num_groups},
              {"dropout", c.dropout},
              {"bn_momentum", c.bn_momentum},
              {"bn_epsilon", c.bn_epsilon},
              {"variant", variant_label(c.variant)}};
}

namespace {

Variant variant_from_json(const Json& j) {
  const auto s = j.get<std::string>();
  const auto v = parse_variant(s);
  if (!v) throw DataError("unknown variant '" + s + "'");
  return *v;
}

}  // namespace

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.encoder_widths = j.at("encoder_widths").get<std::vector<std::size_t>>();
  c.task_hidden = j.at("task_hidden").get<std::vector<std::size_t>>();
  c.adversary_hidden = j.at("adversary_hidden").get<std::vector<std::size_t>>();
  c.num_groups = j.at("num_groups").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_epsilon = j.at("bn_epsilon").get<double>();
  c.variant = variant_from_json(j.at("variant"));
  c.validate();
  return c;
}

Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"lambda", c.lambda},
              {"scheduler",
               {{"factor", c.scheduler.factor},
                {"patience", c.scheduler.patience},
                {"threshold", c.scheduler.threshold},
                {"min_lr", c.scheduler.min_lr}}},
              {"seed", c.seed},
              {"variant", variant_label(c.variant)},
              {"target_scale", c.target_scale},
              {"init_output_bias", c.init_output_bias},
              {"model", to_json(c.model)}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.lambda = j.at("lambda").get<double>();
  const auto& s = j.at("scheduler");
  c.scheduler.factor = s.at("factor").get<double>();
  c.scheduler.patience = s.at("patience").get<int>();
  c.scheduler.threshold = s.at("threshold").get<double>();
  c.scheduler.min_lr = s.at("min_lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.variant = variant_from_json(j.at("variant"));
  c.target_scale = j.at("target_scale").get<double>();
  c.init_output_bias = j.at("init_output_bias").get<bool>();
  c.model = model_config_from_json(j.at("model"));
  c.validate();
  return c;
}

Json to_json(const SyntheticConfig& c) {
  Json marginals = Json::object();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const auto& m = c.marginals[f];
    marginals[std::string(kFeatureNames[f])] = {{"mean", m.mean}, {"sd", m.sd}, {"lo", m.lo}, {"hi", m.hi}};
  }
  Json j{{"n_upazilas", c.n_upazilas},
         {"n_districts", c.n_districts},
         {"haor_fraction", c.haor_fraction},
         {"district_bias_strength", c.district_bias_strength},
         {"noise_sd", c.noise_sd},
         {"district_signature", c.district_signature},
         {"beta0", c.beta0},
         {"beta_vulnerability", c.beta_vulnerability},
         {"beta_exposure", c.beta_exposure},
         {"seed", c.seed},
         {"damage_target",
          {{"mean", c.damage_target.mean},
           {"sd", c.damage_target.sd},
           {"lo", c.damage_target.lo},
           {"hi", c.damage_target.hi}}},
         {"marginals", marginals}};
  if (!c.district_names.empty()) {
    j["district_names"] = c.district_names;
    j["district_sizes"] = c.district_sizes;
    Json haor = Json::array();
    for (bool h : c.district_haor) haor.push_back(h);
    j["district_haor"] = haor;
  }
  return j;
}

Json to_json(const TrainingLog& log) {
  Json epochs = Json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"task_loss", e.task_loss},
                      {"adv_loss", e.adv_loss},
                      {"total_loss", e.total_loss},
                      {"lr", e.lr},
                      {"adv_accuracy", e.adv_accuracy},
                      {"seconds", e.seconds}});
  }
  return Json{{"parameter_count", log.parameter_count}, {"steps", log.steps}, {"epochs", epochs}};
}

Json synthetic_manifest(const SyntheticConfig& config, const SyntheticResult& result,
                        const std::string& csv_name) {
  Json doc = json_document("synthetic_manifest");
  const Json cfg = to_json(config);
  doc["seed"] = config.seed;
  doc["config_hash"] = config_hash(cfg);
  doc["csv"] = csv_name;
  doc["config"] = cfg;
  Json districts = Json::array();
  for (const auto& d : result.districts) {
    districts.push_back({{"name", d.name},
                         {"region", region_label(d.haor ? Region::kHaor : Region::kNonHaor)},
                         {"size", d.size},
                         {"offset_usd_m", d.offset}});
  }
  doc["districts"] = districts;
  Json parents = Json::object();
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const auto& p = result.feature_parents[f];
    parents[std::string(kFeatureNames[f])] = {{"mu", p.mu}, {"sigma", p.sigma}, {"lo", p.lo}, {"hi", p.hi}};
  }
  doc["feature_parents"] = parents;
  doc["clipped_rows"] = result.clipped_rows;
  doc["substitutions"] = {
      {{"slot", "infrastructure_index.embankment"},
       {"column", kEmbankmentSubstitute},
       {"note", "the record schema has no embankment column"}}};
  const auto y = result.dataset.targets();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  doc["damage_summary"] = {{"mean", mean},
                           {"sd", std::sqrt(var / static_cast<double>(y.size()))},
                           {"total", mean * static_cast<double>(y.size())}};
  return doc;
}

void write_text(const std::string& contents, const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << contents;
    if (!out.flush()) throw DataError("cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot write " + path.string() + ": " + ec.message());
}

void write_json(const Json& doc, const fs::path& path) { write_text(doc.dump(2) + "\n", path); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_training_log_csv(const TrainingLog& log, const fs::path& path) {
  std::string csv = "epoch,task_loss,adv_loss,total_loss,lr,adv_accuracy,seconds\n";
  for (const auto& e : log.epochs) {
    csv += std::to_string(e.epoch) + "," + format_double(e.task_loss) + "," + format_double(e.adv_loss) +
           "," + format_double(e.total_loss) + "," + format_double(e.lr) + "," +
           format_double(e.adv_accuracy) + "," + format_double(e.seconds) + "\n";
  }
  write_text(csv, path);
}

void append_training_curve(std::string& csv, const TrainingLog& log, std::string_view variant) {
  const std::string v(variant);
  for (const auto& e : log.epochs) {
    const std::string head = std::to_string(e.epoch) + "," + v + ",";
    csv += head + "task_loss," + format_double(e.task_loss) + "\n";
    csv += head + "adv_loss," + format_double(e.adv_loss) + "\n";
    csv += head + "total_loss," + format_double(e.total_loss) + "\n";
    csv += head + "lr," + format_double(e.lr) + "\n";
  }
}

void append_district_rows(std::string& csv, const FairnessReport& report, const Dataset& data,
                          std::string_view model) {
  std::map<std::string, Region> region_of;
  for (const auto& r : data.records()) region_of[r.district] = r.region;
  for (const auto& label : data.district_labels()) {
    const auto mae = report.per_district_mae.find(label);
    const auto mean = report.per_district_mean_prediction.find(label);
    if (mae == report.per_district_mae.end() || mean == report.per_district_mean_prediction.end()) continue;
    csv += label + "," + std::string(region_label(region_of.at(label))) + "," + std::string(model) + "," +
           format_double(mae->second) + "," + format_double(mean->second) + "\n";
  }
}

namespace {

void put_le(std::vector<std::uint8_t>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

fs::path manifest_path(const fs::path& p) {
  return p.extension() == ".json" ? p : fs::path(p.string() + ".json");
}

}  // namespace

fs::path save_checkpoint(FairModel& model, const TrainConfig& config,
                         const std::vector<std::string>& training_ids, const fs::path& stem) {
  if (!model.standardization()) throw DataError("save_checkpoint: model has no standardization");
  const fs::path manifest = manifest_path(stem);
  fs::path bin = manifest;
  bin.replace_extension(".bin");

  Json layout = Json::array();
  std::vector<std::uint8_t> bytes;
  std::size_t offset = 0;
  for (const auto& t : model.tensors()) {
    layout.push_back({{"name", t.name},
                      {"rows", t.rows},
                      {"cols", t.cols},
                      {"trainable", t.trainable},
                      {"offset", offset}});
    for (double v : t.data) put_le(bytes, v);
    offset += t.data.size();
  }

  // Scalars that must survive bit-exactly also go through the binary.
  const auto& st = *model.standardization();
  for (double v : st.mean) put_le(bytes, v);
  for (double v : st.sd) put_le(bytes, v);
  put_le(bytes, model.output_scale());

  TrainConfig recorded = config;
  recorded.model = model.config();
  const Json cfg = to_json(recorded);

  Json doc = json_document("checkpoint");
  doc["seed"] = config.seed;
  doc["variant"] = variant_label(model.config().variant);
  doc["config_hash"] = config_hash(cfg);
  doc["train_config"] = cfg;
  doc["district_labels"] = model.district_labels();
  doc["standardization"] = to_json(st);
  doc["output_scale"] = model.output_scale();
  doc["parameter_count"] = model.parameter_count();
  doc["training_ids"] = training_ids;
  doc["tensors"] = layout;
  doc["binary"] = {{"file", bin.filename().string()},
                   {"byte_order", "little"},
                   {"dtype", "float64"},
                   {"tensor_values", offset},
                   {"trailer", "standardization mean, standardization sd, output_scale"},
                   {"bytes", bytes.size()},
                   {"crc32", hex32(crc32_of(bytes))}};

  write_text(std::string(bytes.begin(), bytes.end()), bin);
  write_json(doc, manifest);
  return manifest;
}

Checkpoint load_checkpoint(const fs::path& path) {
  const fs::path manifest = manifest_path(path);
  const Json doc = read_json(manifest);
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion || doc.at("kind") != "checkpoint") {
      throw DataError(manifest.string() + ": not a version " + std::to_string(kSchemaVersion) + " checkpoint");
    }
    Checkpoint ck;
    ck.config = train_config_from_json(doc.at("train_config"));
    ck.config_hash = doc.at("config_hash").get<std::string>();
    if (ck.config_hash != config_hash(doc.at("train_config"))) {
      throw DataError(manifest.string() + ": config hash does not match the recorded config");
    }
    ck.training_ids = doc.at("training_ids").get<std::vector<std::string>>();

    const auto& b = doc.at("binary");
    const fs::path bin = manifest.parent_path() / b.at("file").get<std::string>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw DataError("cannot open " + bin.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != b.at("bytes").get<std::size_t>()) {
      throw DataError(bin.string() + ": integrity check failed (size " + std::to_string(bytes.size()) +
                      ", expected " + std::to_string(b.at("bytes").get<std::size_t>()) + ")");
    }
    if (hex32(crc32_of(bytes)) != b.at("crc32").get<std::string>()) {
      throw DataError(bin.string() + ": integrity check failed (crc32 mismatch)");
    }

    ck.model = FairModel(ck.config.model, ck.config.seed);
    auto tensors = ck.model.tensors();
    const auto& layout = doc.at("tensors");
    if (layout.size() != tensors.size()) throw DataError(manifest.string() + ": tensor layout mismatch");
    const std::size_t tensor_values = b.at("tensor_values").get<std::size_t>();
    const std::size_t expected = (tensor_values + 2 * kNumFeatures + 1) * 8;
    if (bytes.size() != expected) throw DataError(bin.string() + ": unexpected payload size");
    const std::uint8_t* p = bytes.data();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& t = tensors[i];
      const auto& l = layout[i];
      if (l.at("name") != t.name || l.at("rows").get<std::size_t>() != t.rows ||
          l.at("cols").get<std::size_t>() != t.cols) {
        throw DataError(manifest.string() + ": tensor '" + t.name + "' does not match the layout");
      }
      for (double& v : t.data) {
        v = get_le(p);
        p += 8;
      }
    }
    StandardizationParams st;
    for (std::size_t f = 0; f < kNumFeatures; ++f, p += 8) st.mean.push_back(get_le(p));
    for (std::size_t f = 0; f < kNumFeatures; ++f, p += 8) st.sd.push_back(get_le(p));
    ck.model.set_standardization(std::move(st));
    ck.model.set_output_scale(get_le(p));
    ck.model.set_district_labels(doc.at("district_labels").get<std::vector<std::string>>());
    return ck;
  } catch (const Json::exception& e) {
    throw DataError(manifest.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace floodaid
