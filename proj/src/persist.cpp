// SPDX-License-Identifier: Apache-2.0

#include "irscf/persist.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "irscf/errors.hpp"

namespace irscf {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path, bool config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    const std::string msg = "cannot open '" + path + "'";
    if (config) throw ConfigError(msg);
    throw LoadError(msg);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Typed access to one JSON object; every key read is remembered so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.emplace_back(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.emplace_back(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError("unknown key " + name_ + "." + key);
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

Vec3 read_vec3(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(name + " must be [x, y, z]");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw ConfigError(name + " must hold numbers");
  }
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

void parse_system(const json& j, SystemConfig& s) {
  Section sec(j, "system");
  const std::size_t old_bs = s.num_bs;
  sec.read("num_bs", s.num_bs);
  sec.read("num_antennas", s.num_antennas);
  sec.read("num_users", s.num_users);
  sec.read("num_elements", s.num_elements);
  sec.read("p_max_dbm", s.p_max_dbm);
  sec.read("noise_dbm", s.noise_dbm);
  sec.read("kappa", s.kappa);
  sec.read("alpha_bu", s.alpha_bu);
  sec.read("alpha_bi", s.alpha_bi);
  sec.read("alpha_iu", s.alpha_iu);
  sec.read("beta0_db", s.beta0_db);
  sec.read("d0_m", s.d0_m);
  sec.read("spacing_irs_wavelengths", s.spacing_irs);
  sec.read("spacing_bs_wavelengths", s.spacing_bs);
  if (const json* bs = sec.child("bs_positions")) {
    if (!bs->is_array()) throw ConfigError("system.bs_positions must be an array");
    s.bs_positions.clear();
    for (std::size_t n = 0; n < bs->size(); ++n) {
      s.bs_positions.push_back(read_vec3((*bs)[n], "system.bs_positions[" + std::to_string(n) + "]"));
    }
  } else if (s.num_bs != old_bs) {
    s.bs_positions = SystemConfig::default_bs_positions(s.num_bs);
  }
  if (const json* irs = sec.child("irs_position")) s.irs_position = read_vec3(*irs, "system.irs_position");
  if (const json* region = sec.child("user_region")) {
    Section r(*region, "system.user_region");
    r.read("x_min", s.user_region.x_min);
    r.read("x_max", s.user_region.x_max);
    r.read("y_min", s.user_region.y_min);
    r.read("y_max", s.user_region.y_max);
    r.read("z", s.user_region.z);
    r.finish();
  }
  sec.finish();
}

void parse_gnn(const json& j, RunConfig& cfg) {
  Section sec(j, "gnn");
  sec.read("widths", cfg.widths);
  sec.read("num_layers", cfg.num_layers);
  sec.read("irs_bs", cfg.irs_bs);
  if (const json* fs = sec.child("feature_scale")) {
    if (!fs->is_null()) {
      if (!fs->is_number()) throw ConfigError("gnn.feature_scale must be a number or null");
      cfg.feature_scale = fs->get<double>();
    }
  }
  sec.finish();
}

void parse_train(const json& j, TrainConfig& t) {
  Section sec(j, "train");
  sec.read("samples_per_epoch", t.samples_per_epoch);
  sec.read("batch_size", t.batch_size);
  sec.read("max_epochs", t.max_epochs);
  sec.read("patience_epochs", t.patience_epochs);
  sec.read("lr0", t.lr0);
  sec.read("decay_factor", t.decay_factor);
  sec.read("decay_every_steps", t.decay_every_steps);
  sec.read("validation_size", t.validation_size);
  sec.read("seed", t.seed);
  sec.read("threads", t.threads);
  sec.finish();
}

void parse_experiment(const json& j, ExperimentSpec& e) {
  Section sec(j, "experiment");
  sec.read("methods", e.methods);
  if (const json* sweep = sec.child("sweep")) {
    Section s(*sweep, "experiment.sweep");
    s.read("variable", e.sweep_variable);
    s.read("values", e.sweep_values);
    s.finish();
  }
  sec.read("trials", e.trials);
  sec.read("seed", e.seed);
  sec.read("checkpoint", e.checkpoint);
  sec.read("threads", e.threads);
  if (const json* ao = sec.child("ao")) {
    Section a(*ao, "experiment.ao");
    a.read("relative_tolerance", e.ao.relative_tolerance);
    a.read("max_iterations", e.ao.max_iterations);
    a.finish();
  }
  sec.finish();
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
T field(const json& obj, const char* key, const char* where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw LoadError(std::string("checkpoint: missing field '") + where + key + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw LoadError(std::string("checkpoint: field '") + where + key + "' has the wrong type");
  }
}

}  // namespace

ModelShape RunConfig::model_shape() const {
  ModelShape shape = model_shape_for(system, widths, num_layers, irs_bs);
  if (feature_scale) shape.feature_scale = *feature_scale;
  return shape;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(j, "config");
  if (const json* s = top.child("system")) parse_system(*s, cfg.system);
  if (const json* g = top.child("gnn")) parse_gnn(*g, cfg);
  if (const json* t = top.child("train")) parse_train(*t, cfg.train);
  if (const json* e = top.child("experiment")) parse_experiment(*e, cfg.experiment);
  top.finish();

  cfg.system.validate();
  cfg.train.validate();
  cfg.experiment.validate();
  if (cfg.widths.empty()) throw ConfigError("gnn.widths must be non-empty");
  if (cfg.num_layers < 1) throw ConfigError("gnn.num_layers must be at least 1");
  if (cfg.irs_bs >= cfg.system.num_bs) throw ConfigError("gnn.irs_bs must be below system.num_bs");
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path, true)); }

std::string config_to_json(const RunConfig& cfg) {
  const SystemConfig& s = cfg.system;
  json bs = json::array();
  for (const Vec3& p : s.bs_positions) bs.push_back(vec3_json(p));
  json j;
  j["system"] = {{"num_bs", s.num_bs},
                 {"num_antennas", s.num_antennas},
                 {"num_users", s.num_users},
                 {"num_elements", s.num_elements},
                 {"p_max_dbm", s.p_max_dbm},
                 {"noise_dbm", s.noise_dbm},
                 {"kappa", s.kappa},
                 {"alpha_bu", s.alpha_bu},
                 {"alpha_bi", s.alpha_bi},
                 {"alpha_iu", s.alpha_iu},
                 {"beta0_db", s.beta0_db},
                 {"d0_m", s.d0_m},
                 {"spacing_irs_wavelengths", s.spacing_irs},
                 {"spacing_bs_wavelengths", s.spacing_bs},
                 {"bs_positions", bs},
                 {"irs_position", vec3_json(s.irs_position)},
                 {"user_region",
                  {{"x_min", s.user_region.x_min},
                   {"x_max", s.user_region.x_max},
                   {"y_min", s.user_region.y_min},
                   {"y_max", s.user_region.y_max},
                   {"z", s.user_region.z}}}};
  j["gnn"] = {{"widths", cfg.widths},
              {"num_layers", cfg.num_layers},
              {"irs_bs", cfg.irs_bs},
              {"feature_scale", cfg.feature_scale ? json(*cfg.feature_scale) : json(nullptr)}};
  const TrainConfig& t = cfg.train;
  j["train"] = {{"samples_per_epoch", t.samples_per_epoch},
                {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs},
                {"patience_epochs", t.patience_epochs},
                {"lr0", t.lr0},
                {"decay_factor", t.decay_factor},
                {"decay_every_steps", t.decay_every_steps},
                {"validation_size", t.validation_size},
                {"seed", t.seed},
                {"threads", t.threads}};
  const ExperimentSpec& e = cfg.experiment;
  j["experiment"] = {{"methods", e.methods},
                     {"sweep", {{"variable", e.sweep_variable}, {"values", e.sweep_values}}},
                     {"trials", e.trials},
                     {"seed", e.seed},
                     {"checkpoint", e.checkpoint},
                     {"threads", e.threads},
                     {"ao",
                      {{"relative_tolerance", e.ao.relative_tolerance},
                       {"max_iterations", e.ao.max_iterations}}}};
  return j.dump(2) + "\n";
}

std::string checkpoint_to_string(const GnnModel& model) {
  const ModelShape& s = model.shape;
  std::string out = "{\n";
  out += "  \"format\": \"irscf-gnn-checkpoint\",\n";
  out += "  \"version\": " + std::to_string(kCheckpointVersion) + ",\n";
  out += "  \"header\": {\n";
  out += "    \"num_bs\": " + std::to_string(s.num_bs) + ",\n";
  out += "    \"num_antennas\": " + std::to_string(s.num_antennas) + ",\n";
  out += "    \"num_elements\": " + std::to_string(s.num_elements) + ",\n";
  out += "    \"widths\": [";
  for (std::size_t n = 0; n < s.widths.size(); ++n) {
    out += (n ? ", " : "") + std::to_string(s.widths[n]);
  }
  out += "],\n";
  out += "    \"num_layers\": " + std::to_string(s.num_layers) + ",\n";
  out += "    \"irs_bs\": " + std::to_string(s.irs_bs) + ",\n";
  out += "    \"p_max_dbm\": " + fmt17(s.p_max_dbm) + ",\n";
  out += "    \"feature_scale\": " + fmt17(s.feature_scale) + "\n";
  out += "  },\n";
  out += "  \"parameters\": [\n";
  const auto params = named_parameters(model);
  for (std::size_t n = 0; n < params.size(); ++n) {
    const RealTensor& t = *params[n].second;
    out += "    {\"name\": \"" + params[n].first + "\", \"shape\": [" + std::to_string(t.rows()) +
           ", " + std::to_string(t.cols()) + "], \"values\": [";
    for (std::size_t j = 0; j < t.size(); ++j) out += (j ? ", " : "") + fmt17(t[j]);
    out += "]}";
    out += n + 1 < params.size() ? ",\n" : "\n";
  }
  out += "  ]\n}\n";
  return out;
}

GnnModel checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("checkpoint is malformed or truncated: ") + e.what());
  }
  if (!j.is_object()) throw LoadError("checkpoint: top level must be an object");
  if (field<std::string>(j, "format", "") != "irscf-gnn-checkpoint") {
    throw LoadError("checkpoint: field 'format' is not irscf-gnn-checkpoint");
  }
  const int version = field<int>(j, "version", "");
  if (version != kCheckpointVersion) {
    throw LoadError("checkpoint: field 'version' is " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const auto hit = j.find("header");
  if (hit == j.end() || !hit->is_object()) throw LoadError("checkpoint: missing field 'header'");
  const json& h = *hit;
  ModelShape shape;
  shape.num_bs = field<std::size_t>(h, "num_bs", "header.");
  shape.num_antennas = field<std::size_t>(h, "num_antennas", "header.");
  shape.num_elements = field<std::size_t>(h, "num_elements", "header.");
  shape.widths = field<std::vector<std::size_t>>(h, "widths", "header.");
  shape.num_layers = field<std::size_t>(h, "num_layers", "header.");
  shape.irs_bs = field<std::size_t>(h, "irs_bs", "header.");
  shape.p_max_dbm = field<double>(h, "p_max_dbm", "header.");
  shape.feature_scale = field<double>(h, "feature_scale", "header.");

  GnnModel model;
  try {
    Rng unused(0);
    model = init_model(shape, unused);
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint: invalid header: ") + e.what());
  }

  const auto pit = j.find("parameters");
  if (pit == j.end() || !pit->is_array()) throw LoadError("checkpoint: missing field 'parameters'");
  const json& entries = *pit;
  const auto expected = named_parameters(model);
  std::vector<RealTensor*> slots = mutable_parameters(model);
  if (entries.size() != expected.size()) {
    throw LoadError("checkpoint: field 'parameters' has " + std::to_string(entries.size()) +
                    " entries, header (num_bs, widths, num_layers, irs_bs) implies " +
                    std::to_string(expected.size()));
  }
  for (std::size_t n = 0; n < expected.size(); ++n) {
    const json& e = entries[n];
    const std::string& name = expected[n].first;
    const std::string where = "parameters[" + std::to_string(n) + "].";
    if (!e.is_object()) throw LoadError("checkpoint: " + where + " must be an object");
    if (field<std::string>(e, "name", where.c_str()) != name) {
      throw LoadError("checkpoint: field '" + where + "name' should be '" + name + "'");
    }
    const auto dims = field<std::vector<std::size_t>>(e, "shape", where.c_str());
    RealTensor& slot = *slots[n];
    if (dims.size() != 2 || dims[0] != slot.rows() || dims[1] != slot.cols()) {
      throw LoadError("checkpoint: parameter '" + name + "' shape disagrees with header fields "
                      "num_antennas/num_elements/widths (expected [" +
                      std::to_string(slot.rows()) + ", " + std::to_string(slot.cols()) + "])");
    }
    const auto values = field<std::vector<double>>(e, "values", where.c_str());
    if (values.size() != slot.size()) {
      throw LoadError("checkpoint: field '" + where + "values' has " +
                      std::to_string(values.size()) + " numbers, expected " +
                      std::to_string(slot.size()));
    }
    std::copy(values.begin(), values.end(), slot.data().begin());
    if (!slot.all_finite()) throw LoadError("checkpoint: parameter '" + name + "' is not finite");
  }
  return model;
}

void save_checkpoint(const GnnModel& model, const std::string& path) {
  write_text(path, checkpoint_to_string(model));
}

GnnModel load_checkpoint(const std::string& path) {
  return checkpoint_from_string(read_file(path, false));
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,val_sum_rate,lr,skipped_steps\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + ',' + fmt17(r.train_loss) + ',' + fmt17(r.val_loss) + ',' +
           fmt17(r.val_sum_rate) + ',' + fmt17(r.lr) + ',' + std::to_string(r.skipped_steps) + '\n';
  }
  return out;
}

std::string results_to_json(const SystemConfig& base, const ExperimentSpec& spec,
                            const std::vector<ResultRow>& rows) {
  RunConfig cfg;
  cfg.system = base;
  cfg.experiment = spec;
  json j;
  j["rng"] = Rng::kAlgorithm;
  j["config"] = json::parse(config_to_json(cfg));
  j["config"].erase("train");
  j["config"].erase("gnn");
  json out = json::array();
  for (const ResultRow& r : rows) {
    json row = {{"method", r.method},
                {"M", r.M},
                {"K", r.K},
                {"L", r.L},
                {"p_max_dbm", r.p_max_dbm},
                {"feasible", r.feasible},
                {"csi_exchange_scalars", r.csi_exchange_scalars},
                {"signaling_exchange_scalars", r.signaling_exchange_scalars},
                {"trials", r.trials},
                {"seed", r.seed}};
    if (r.feasible) {
      row["mean_sum_rate"] = r.mean_sum_rate;
      row["std_sum_rate"] = r.std_sum_rate;
      row["mean_time_ms"] = r.mean_time_ms;
    }
    out.push_back(std::move(row));
  }
  j["rows"] = std::move(out);
  return j.dump(2) + "\n";
}

}  // namespace irscf
