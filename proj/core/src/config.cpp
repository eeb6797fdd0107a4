#include "chronosurv/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "chronosurv/errors.hpp"

namespace chronosurv {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidConfigError("bad number for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw InvalidConfigError("bad seed for " + key + ": '" + v + "'");
  }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},

      {"cohort.n", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.n = to_int(k, v); }},
      {"cohort.vol_nx", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.vol_nx = to_int(k, v); }},
      {"cohort.vol_ny", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.vol_ny = to_int(k, v); }},
      {"cohort.vol_nz", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.vol_nz = to_int(k, v); }},
      {"cohort.spacing_x", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.spacing_mm[0] = to_double(k, v); }},
      {"cohort.spacing_y", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.spacing_mm[1] = to_double(k, v); }},
      {"cohort.spacing_z", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.spacing_mm[2] = to_double(k, v); }},
      {"cohort.lesion_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lesion_min = to_int(k, v); }},
      {"cohort.lesion_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lesion_max = to_int(k, v); }},
      {"cohort.lesion_radius_min_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lesion_radius_min_mm = to_double(k, v); }},
      {"cohort.lesion_radius_max_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lesion_radius_max_mm = to_double(k, v); }},
      {"cohort.high_burden_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.high_burden_frac = to_double(k, v); }},
      {"cohort.hb_lesion_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.hb_lesion_min = to_int(k, v); }},
      {"cohort.hb_lesion_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.hb_lesion_max = to_int(k, v); }},
      {"cohort.hb_radius_min_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.hb_radius_min_mm = to_double(k, v); }},
      {"cohort.hb_radius_max_mm", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.hb_radius_max_mm = to_double(k, v); }},
      {"cohort.lambda0", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lambda0 = to_double(k, v); }},
      {"cohort.beta_tmtv", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.beta_tmtv = to_double(k, v); }},
      {"cohort.beta_age", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.beta_age = to_double(k, v); }},
      {"cohort.lfd_min_days", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lfd_min_days = to_int(k, v); }},
      {"cohort.lfd_max_days", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.lfd_max_days = to_int(k, v); }},
      {"cohort.t_stage_missing_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.t_stage_missing_rate = to_double(k, v); }},
      {"cohort.n_stage_missing_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.n_stage_missing_rate = to_double(k, v); }},
      {"cohort.age_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.age_min = to_double(k, v); }},
      {"cohort.age_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.cohort.age_max = to_double(k, v); }},

      {"model.kind",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "image") c.train.model.kind = EncoderKind::image;
         else if (v == "tabular") c.train.model.kind = EncoderKind::tabular;
         else throw InvalidConfigError("bad value for " + k + ": '" + v + "' (image|tabular)");
       }},
      {"model.stem_pool", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.stem_pool = to_int(k, v); }},
      {"model.conv1", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.conv_widths[0] = to_int(k, v); }},
      {"model.conv2", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.conv_widths[1] = to_int(k, v); }},
      {"model.conv3", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.conv_widths[2] = to_int(k, v); }},
      {"model.embed_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.embed_dim = to_int(k, v); }},
      {"model.temporal_hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.temporal_hidden = to_int(k, v); }},
      {"model.classifier_hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.classifier_hidden = to_int(k, v); }},
      {"model.tabular_hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.model.tabular_hidden = to_int(k, v); }},
      {"model.monotonize", [](RunConfig& c, const std::string& k, const std::string& v) { c.monotonize_reports = to_bool(k, v); }},

      {"loss.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.loss.alpha = to_double(k, v); }},
      {"loss.gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.loss.gamma = to_double(k, v); }},
      {"loss.lambda", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.loss.lambda = to_double(k, v); }},

      {"sampling.alive_points", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.sampling.alive_points = to_int(k, v); }},
      {"sampling.deceased_points", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.sampling.deceased_points = to_int(k, v); }},
      {"sampling.horizon_days", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.sampling.horizon_days = to_int(k, v); }},
      {"sampling.grid_step", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.sampling.grid_step = to_int(k, v); }},

      {"train.epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = to_int(k, v); }},
      {"train.folds", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.k_folds = to_int(k, v); }},
      {"train.lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.lr = to_double(k, v); }},
      {"train.weight_decay", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adam.weight_decay = to_double(k, v); }},
      {"train.batch_patients", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_patients = to_int(k, v); }},
      {"train.augment", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment = to_bool(k, v); }},
      {"train.baseline_epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.baseline_epochs = to_int(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw InvalidConfigError("unknown config key: " + key);
    it->second(cfg, key, value);
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config: " + path);
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  out << "seed = " << cfg.seed << '\n';
  out << "cohort.n = " << cfg.cohort.n << '\n';
  out << "cohort.vol_nx = " << cfg.cohort.vol_nx << '\n';
  out << "cohort.vol_ny = " << cfg.cohort.vol_ny << '\n';
  out << "cohort.vol_nz = " << cfg.cohort.vol_nz << '\n';
  out << "cohort.spacing_x = " << num(cfg.cohort.spacing_mm[0]) << '\n';
  out << "cohort.spacing_y = " << num(cfg.cohort.spacing_mm[1]) << '\n';
  out << "cohort.spacing_z = " << num(cfg.cohort.spacing_mm[2]) << '\n';
  out << "cohort.lesion_min = " << cfg.cohort.lesion_min << '\n';
  out << "cohort.lesion_max = " << cfg.cohort.lesion_max << '\n';
  out << "cohort.lesion_radius_min_mm = " << num(cfg.cohort.lesion_radius_min_mm) << '\n';
  out << "cohort.lesion_radius_max_mm = " << num(cfg.cohort.lesion_radius_max_mm) << '\n';
  out << "cohort.high_burden_frac = " << num(cfg.cohort.high_burden_frac) << '\n';
  out << "cohort.hb_lesion_min = " << cfg.cohort.hb_lesion_min << '\n';
  out << "cohort.hb_lesion_max = " << cfg.cohort.hb_lesion_max << '\n';
  out << "cohort.hb_radius_min_mm = " << num(cfg.cohort.hb_radius_min_mm) << '\n';
  out << "cohort.hb_radius_max_mm = " << num(cfg.cohort.hb_radius_max_mm) << '\n';
  out << "cohort.lambda0 = " << num(cfg.cohort.lambda0) << '\n';
  out << "cohort.beta_tmtv = " << num(cfg.cohort.beta_tmtv) << '\n';
  out << "cohort.beta_age = " << num(cfg.cohort.beta_age) << '\n';
  out << "cohort.lfd_min_days = " << cfg.cohort.lfd_min_days << '\n';
  out << "cohort.lfd_max_days = " << cfg.cohort.lfd_max_days << '\n';
  out << "cohort.t_stage_missing_rate = " << num(cfg.cohort.t_stage_missing_rate) << '\n';
  out << "cohort.n_stage_missing_rate = " << num(cfg.cohort.n_stage_missing_rate) << '\n';
  out << "cohort.age_min = " << num(cfg.cohort.age_min) << '\n';
  out << "cohort.age_max = " << num(cfg.cohort.age_max) << '\n';
  out << "model.kind = " << (cfg.train.model.kind == EncoderKind::image ? "image" : "tabular") << '\n';
  out << "model.stem_pool = " << cfg.train.model.stem_pool << '\n';
  out << "model.conv1 = " << cfg.train.model.conv_widths[0] << '\n';
  out << "model.conv2 = " << cfg.train.model.conv_widths[1] << '\n';
  out << "model.conv3 = " << cfg.train.model.conv_widths[2] << '\n';
  out << "model.embed_dim = " << cfg.train.model.embed_dim << '\n';
  out << "model.temporal_hidden = " << cfg.train.model.temporal_hidden << '\n';
  out << "model.classifier_hidden = " << cfg.train.model.classifier_hidden << '\n';
  out << "model.tabular_hidden = " << cfg.train.model.tabular_hidden << '\n';
  out << "model.monotonize = " << (cfg.monotonize_reports ? "true" : "false") << '\n';
  out << "loss.alpha = " << num(cfg.train.loss.alpha) << '\n';
  out << "loss.gamma = " << num(cfg.train.loss.gamma) << '\n';
  out << "loss.lambda = " << num(cfg.train.loss.lambda) << '\n';
  out << "sampling.alive_points = " << cfg.train.sampling.alive_points << '\n';
  out << "sampling.deceased_points = " << cfg.train.sampling.deceased_points << '\n';
  out << "sampling.horizon_days = " << cfg.train.sampling.horizon_days << '\n';
  out << "sampling.grid_step = " << cfg.train.sampling.grid_step << '\n';
  out << "train.epochs = " << cfg.train.epochs << '\n';
  out << "train.folds = " << cfg.train.k_folds << '\n';
  out << "train.lr = " << num(cfg.train.adam.lr) << '\n';
  out << "train.weight_decay = " << num(cfg.train.adam.weight_decay) << '\n';
  out << "train.batch_patients = " << cfg.train.batch_patients << '\n';
  out << "train.augment = " << (cfg.train.augment ? "true" : "false") << '\n';
  out << "train.baseline_epochs = " << cfg.baseline_epochs << '\n';
  if (!out) throw IoError("resolved config write failed: " + path);
}

}  // namespace chronosurv
