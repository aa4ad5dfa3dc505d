/*
 * Copyright 2026 The fliscc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fliscc/config.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fliscc/errors.hpp"

namespace fliscc {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& at(const std::string& key) { return node_.at(key); }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    if (!node_.contains(key)) return Section(kEmpty, join(key));
    return Section(node_.at(key), join(key));
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  void get_number(const std::string& key, double& out) {
    if (!has(key)) return;
    if (!node_.at(key).is_number()) throw ConfigError(where(key) + " must be a number");
    out = node_.at(key).get<double>();
  }

  template <typename Int>
  void get_int(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) {
        throw ConfigError(where(key) + " must be non-negative");
      }
    }
    out = v.get<Int>();
  }

  std::string get_string(const std::string& key, std::string fallback) {
    if (!has(key)) return fallback;
    if (!node_.at(key).is_string()) throw ConfigError(where(key) + " must be a string");
    return node_.at(key).get<std::string>();
  }

  // A scalar broadcast to every device, or an explicit per-device list.
  void get_numbers(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + " must be a number or list");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must contain numbers only");
      out.push_back(e.get<double>());
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + join(key) + "'");
    }
  }

  std::string where(const std::string& key) const { return "'" + join(key) + "'"; }

 private:
  std::string join(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

DataSource parse_data_source(const std::string& name) {
  if (name == "blobs") return DataSource::kBlobs;
  if (name == "logistic_teacher") return DataSource::kLogisticTeacher;
  if (name == "file") return DataSource::kFile;
  throw ConfigError("unknown data source '" + name + "'");
}

CpuCharging parse_charging(const std::string& name) {
  if (name == "samples_processed") return CpuCharging::kSamplesProcessed;
  if (name == "whole_epoch") return CpuCharging::kWholeEpoch;
  throw ConfigError("unknown cost.charging '" + name + "'");
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("cannot parse '" + std::string(text) + "' as " + std::string(what));
  }
  return value;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig c;
  c.source_text = std::string(text);
  Section top(doc, "");
  c.algorithm = parse_algorithm(top.get_string("algorithm", "fedavg"));
  top.get_int("devices", c.devices);
  top.get_int("rounds", c.rounds);
  top.get_int("seed", c.seed);
  top.get_int("threads", c.threads);
  top.get("error_free", c.error_free);

  {
    Section s = top.child("model");
    c.model.kind = parse_model_kind(s.get_string("kind", std::string(to_string(c.model.kind))));
    s.get_int("features", c.model.features);
    s.get_int("classes", c.model.classes);
    s.get_int("hidden", c.model.hidden);
    s.get_int("dim", c.model.dim);
    s.get_numbers("center", c.model.center);
    s.get_number("center_scale", c.model.center_scale);
    s.get_number("init_scale", c.model.init_scale);
    s.finish();
  }
  {
    Section s = top.child("training");
    s.get_number("eta", c.training.eta);
    s.get_int("tau", c.training.tau);
    s.get_int("batch_size", c.training.batch_size);
    s.finish();
  }
  {
    Section s = top.child("schedule");
    c.schedule.strategy = parse_schedule_strategy(
        s.get_string("strategy", std::string(to_string(c.schedule.strategy))));
    if (s.has("total_per_device")) {
      const json& v = s.at("total_per_device");
      if (v.is_string() && v.get<std::string>() == "auto") {
        c.schedule.total_per_device.reset();
      } else if (v.is_number_integer()) {
        c.schedule.total_per_device = v.get<std::int64_t>();
      } else {
        throw ConfigError("'schedule.total_per_device' must be an integer or \"auto\"");
      }
    }
    s.get_int("initial_size", c.schedule.initial_size);
    if (s.has("matrix")) {
      try {
        c.schedule.matrix = s.at("matrix").get<std::vector<std::vector<std::int64_t>>>();
      } catch (const json::exception&) {
        throw ConfigError("'schedule.matrix' must be a list of integer lists");
      }
    }
    s.finish();
  }
  {
    Section s = top.child("data");
    c.data.source = parse_data_source(s.get_string("source", "blobs"));
    c.data.path = s.get_string("path", "");
    s.get_int("pool_size", c.data.pool_size);
    s.get_int("test_size", c.data.test_size);
    s.get_number("separation", c.data.separation);
    s.get_number("noise", c.data.noise);
    if (s.has("seed")) {
      std::uint64_t seed = 0;
      s.get_int("seed", seed);
      c.data.seed = seed;
    }
    s.finish();
  }
  {
    Section s = top.child("partition");
    c.partition.mode = parse_partition_mode(s.get_string("mode", "iid"));
    s.get_number("gamma", c.partition.gamma);
    s.finish();
  }
  {
    Section s = top.child("channel");
    c.channel.policy =
        parse_power_policy(s.get_string("policy", std::string(to_string(c.channel.policy))));
    s.get_number("lambda", c.channel.lambda);
    s.get_number("noise_variance", c.channel.noise_variance);
    s.get_numbers("max_power", c.channel.max_power);
    s.finish();
  }
  {
    Section s = top.child("cost");
    s.get_number("slot_seconds", c.cost.slot_seconds);
    s.get_int("symbols_per_block", c.cost.symbols_per_block);
    s.get_numbers("cycles_per_sample", c.cost.cycles_per_sample);
    s.get_numbers("energy_coeff", c.cost.energy_coeff);
    s.get_numbers("cpu_freq", c.cost.cpu_freq);
    c.cost.charging = parse_charging(s.get_string("charging", "samples_processed"));
    s.get("include_downlink", c.cost.include_downlink);
    s.finish();
  }
  {
    Section s = top.child("analysis");
    s.get_int("probes", c.analysis.probes);
    s.get_int("probe_batches", c.analysis.probe_batches);
    s.get_number("probe_step", c.analysis.probe_step);
    if (s.has("f_star")) {
      double f = 0.0;
      s.get_number("f_star", f);
      c.analysis.f_star = f;
    }
    s.get("iid_tag", c.analysis.iid_tag);
    s.finish();
  }
  {
    Section s = top.child("output");
    c.output.dir = s.get_string("dir", "");
    s.get_int("eval_stride", c.output.eval_stride);
    if (s.has("target_loss")) {
      double v = 0.0;
      s.get_number("target_loss", v);
      c.output.target_loss = v;
    }
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<double> per_device(const std::vector<double>& values, int devices,
                               std::string_view key) {
  if (values.size() == 1) return std::vector<double>(static_cast<std::size_t>(devices), values[0]);
  if (values.size() != static_cast<std::size_t>(devices)) {
    throw ConfigError("'" + std::string(key) + "' needs 1 or " + std::to_string(devices) +
                      " values, got " + std::to_string(values.size()));
  }
  return values;
}

void ExperimentConfig::validate() const {
  if (devices < 1) throw ConfigError("'devices' must be >= 1");
  if (rounds < 0) throw ConfigError("'rounds' must be >= 0");
  if (threads < 0) throw ConfigError("'threads' must be >= 0");
  if (model.kind == ModelKind::kQuadratic) {
    if (model.center.empty() && model.dim < 1) throw ConfigError("'model.dim' must be >= 1");
  } else {
    if (model.features < 1) throw ConfigError("'model.features' must be >= 1");
    if (model.classes < 2) throw ConfigError("'model.classes' must be >= 2");
    if (model.kind == ModelKind::kMlp && model.hidden < 1) {
      throw ConfigError("'model.hidden' must be >= 1");
    }
  }
  if (!(training.eta > 0.0)) throw ConfigError("'training.eta' must be positive");
  if (training.tau < 1) throw ConfigError("'training.tau' must be >= 1");
  if (training.batch_size < 1) throw ConfigError("'training.batch_size' must be >= 1");
  if (schedule.initial_size < 0) throw ConfigError("'schedule.initial_size' must be >= 0");
  if (schedule.total_per_device && *schedule.total_per_device < 0) {
    throw ConfigError("'schedule.total_per_device' must be >= 0");
  }
  if (!schedule.matrix.empty()) {
    if (schedule.matrix.size() != static_cast<std::size_t>(devices)) {
      throw ConfigError("'schedule.matrix' needs one row per device");
    }
    for (const auto& row : schedule.matrix) {
      if (row.size() != static_cast<std::size_t>(rounds)) {
        throw ConfigError("'schedule.matrix' rows need one entry per round");
      }
      for (std::int64_t v : row) {
        if (v < 0) throw ConfigError("'schedule.matrix' entries must be >= 0");
      }
    }
  } else if (!schedule.total_per_device && data.pool_size == 0 &&
             data.source != DataSource::kFile) {
    throw ConfigError("'schedule.total_per_device' = \"auto\" needs 'data.pool_size'");
  }
  if (data.source == DataSource::kFile && data.path.empty()) {
    throw ConfigError("'data.path' is required for the file source");
  }
  if (!(data.noise >= 0.0)) throw ConfigError("'data.noise' must be >= 0");
  if (partition.mode == PartitionMode::kDirichlet && !(partition.gamma > 0.0)) {
    throw ConfigError("'partition.gamma' must be positive");
  }
  if (!(channel.lambda > 0.0)) throw ConfigError("'channel.lambda' must be positive");
  if (!(channel.noise_variance >= 0.0)) {
    throw ConfigError("'channel.noise_variance' must be >= 0");
  }
  for (double p : per_device(channel.max_power, devices, "channel.max_power")) {
    if (!(p > 0.0)) throw ConfigError("'channel.max_power' must be positive");
  }
  if (!(cost.slot_seconds > 0.0)) throw ConfigError("'cost.slot_seconds' must be positive");
  if (cost.symbols_per_block < 1) throw ConfigError("'cost.symbols_per_block' must be >= 1");
  for (double f : per_device(cost.cpu_freq, devices, "cost.cpu_freq")) {
    if (!(f > 0.0)) throw ConfigError("'cost.cpu_freq' must be positive");
  }
  for (double v : per_device(cost.cycles_per_sample, devices, "cost.cycles_per_sample")) {
    if (!(v >= 0.0)) throw ConfigError("'cost.cycles_per_sample' must be >= 0");
  }
  for (double v : per_device(cost.energy_coeff, devices, "cost.energy_coeff")) {
    if (!(v >= 0.0)) throw ConfigError("'cost.energy_coeff' must be >= 0");
  }
  if (analysis.probes < 0 || analysis.probe_batches < 0) {
    throw ConfigError("'analysis.probes' and 'analysis.probe_batches' must be >= 0");
  }
  if (!(analysis.probe_step > 0.0)) throw ConfigError("'analysis.probe_step' must be positive");
  if (output.eval_stride < 1) throw ConfigError("'output.eval_stride' must be >= 1");
}

void apply_axis(ExperimentConfig& config, std::string_view axis, std::string_view value) {
  if (axis == "gamma") {
    config.partition.mode = PartitionMode::kDirichlet;
    config.partition.gamma = parse_number<double>(value, "gamma");
  } else if (axis == "sigma_z" || axis == "noise_variance") {
    config.channel.noise_variance = parse_number<double>(value, "noise variance");
  } else if (axis == "eta") {
    config.training.eta = parse_number<double>(value, "eta");
  } else if (axis == "tau") {
    config.training.tau = parse_number<int>(value, "tau");
  } else if (axis == "schedule") {
    config.schedule.strategy = parse_schedule_strategy(value);
    config.schedule.matrix.clear();
  } else if (axis == "lambda") {
    config.channel.lambda = parse_number<double>(value, "lambda");
  } else if (axis == "seed") {
    config.seed = parse_number<std::uint64_t>(value, "seed");
  } else {
    throw ConfigError("unknown sweep axis '" + std::string(axis) + "'");
  }
  config.validate();
}

}  // namespace fliscc
