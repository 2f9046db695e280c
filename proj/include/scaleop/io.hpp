#pragma once

#include "scaleop/sino.hpp"
#include "scaleop/training.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace scaleop {

using Json = nlohmann::json;

/// Dataset container: a structured-text manifest (equation, scales,
/// resolutions, counts, generator settings, RNG seeds, format version) plus
/// per-instance named tensors, written as 64-bit little-endian floats with
/// explicit (name, dtype, shape) records. Round trips are bit-exact.
struct Dataset {
  Json manifest;
  std::vector<PdeInstance> instances;
};

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// Checkpoint: architecture, named parameter tensors, optimizer state, the
/// training-config echo and metric history. load(save(x)) == x bitwise.
struct Checkpoint {
  ArchSpec arch;
  Index in_channels = 0;
  Index out_channels = 1;
  ParamStore params;
  Index adam_t = 0;
  std::vector<VectorX> adam_m, adam_v;
  Json config_echo;
  Json metric_history = Json::array();
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

SinoModel model_from_checkpoint(const Checkpoint& ck);
Checkpoint checkpoint_from(const SinoModel& model, const Json& config_echo);

Json arch_to_json(const ArchSpec& a);
ArchSpec arch_from_json(const Json& j);

Json domain_to_json(const Domain& d);
Domain domain_from_json(const Json& j);

/// Line-delimited structured records (one JSON object per line).
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  ~MetricsWriter();
  void write(const Json& record);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Json epoch_to_json(const EpochMetrics& em);

}  // namespace scaleop
