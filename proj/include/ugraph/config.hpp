#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ugraph/active_net.hpp"
#include "ugraph/bnn.hpp"
#include "ugraph/evaluation.hpp"
#include "ugraph/io.hpp"
#include "ugraph/wrench_sim.hpp"

namespace ugraph {

using Json = nlohmann::ordered_json;

struct EvalConfig {
  int scenes = 20;
  int episodes = 5;
  std::vector<std::string> methods = all_methods();
  double force_floor = kDefaultForceFloor;
  double object_max_dim = 0.15;  // m, denominator of the relative-error footnote
};

struct OodConfig {
  std::vector<double> masses = {0.0434, 0.2446, 0.4462, 0.6481};
  int offsets = 5;
  int episodes = 5;
  std::vector<std::string> methods = {method::kUGraph};
};

/// Everything a run depends on. Round-trips losslessly through JSON.
struct RunConfig {
  std::uint64_t seed = 7;
  DatasetConfig dataset;
  BnnConfig bnn;
  ActiveNetConfig activenet;
  int grid_resolution = 21;
  EvalConfig eval;
  OodConfig ood;

  /// Sizes used in the original hardware study.
  static RunConfig full_scale() {
    RunConfig c;
    c.dataset.grasps = 204;
    c.dataset.orientations_per_grasp = 100;
    c.bnn.hidden = {256, 128, 64};
    c.bnn.samples = 1000;
    c.bnn.warmup = 200;
    c.bnn.epochs = 500;
    c.activenet.hidden = {1024, 1024, 512, 64};
    c.activenet.epochs = 500;
    return c;
  }
};

inline const char* to_string(LabelMode m) { return m == LabelMode::kFusedEstimate ? "fused" : "second"; }

inline LabelMode label_mode_from_string(const std::string& s) {
  if (s == "second") return LabelMode::kSecondEstimate;
  if (s == "fused") return LabelMode::kFusedEstimate;
  throw ConfigError("activenet.label_mode must be \"second\" or \"fused\"");
}

inline Json to_json(const RunConfig& c) {
  const auto& d = c.dataset;
  Json j;
  j["seed"] = c.seed;
  j["dataset"] = {
      {"grasps", d.grasps},
      {"orientations_per_grasp", d.orientations_per_grasp},
      {"mass_min", d.mass_min},
      {"mass_max", d.mass_max},
      {"offset_box", {d.offset_box.x(), d.offset_box.y(), d.offset_box.z()}},
      {"max_offset", d.max_offset},
      {"gravity", d.gravity},
      {"slip_discard", d.slip_discard},
      {"max_angle", d.bounds.max_angle},
      {"noise",
       {{"sigma_force", d.noise.sigma_force},
        {"sigma_torque", d.noise.sigma_torque},
        {"slip_enabled", d.noise.slip_enabled},
        {"slip_prob", d.noise.slip_prob},
        {"slip_sigma", d.noise.slip_sigma}}},
  };
  const auto& b = c.bnn;
  j["bnn"] = {{"hidden", b.hidden},
              {"noise_head", b.noise_head},
              {"samples", b.samples},
              {"warmup", b.warmup},
              {"learning_rate", b.learning_rate},
              {"epochs", b.epochs},
              {"batch_size", b.batch_size},
              {"prior_std", b.prior_std},
              {"sigma_prior_scale", b.sigma_prior_scale},
              {"max_tree_depth", b.max_tree_depth},
              {"target_accept", b.target_accept}};
  const auto& a = c.activenet;
  j["activenet"] = {{"hidden", a.hidden},
                    {"learning_rate", a.learning_rate},
                    {"epochs", a.epochs},
                    {"batch_size", a.batch_size},
                    {"label_mode", to_string(a.label_mode)}};
  j["grid_resolution"] = c.grid_resolution;
  j["eval"] = {{"scenes", c.eval.scenes},
               {"episodes", c.eval.episodes},
               {"methods", c.eval.methods},
               {"force_floor", c.eval.force_floor},
               {"object_max_dim", c.eval.object_max_dim}};
  j["ood"] = {{"masses", c.ood.masses},
              {"offsets", c.ood.offsets},
              {"episodes", c.ood.episodes},
              {"methods", c.ood.methods}};
  return j;
}

namespace detail {

/// Rejects keys the defaults do not know about, naming the offending path.
inline void check_known_keys(const Json& given, const Json& defaults, const std::string& path) {
  if (!given.is_object()) return;
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown config field: " + p);
    if (defaults[it.key()].is_object()) {
      if (!it.value().is_object()) throw ConfigError("config field " + p + " must be an object");
      check_known_keys(it.value(), defaults[it.key()], p);
    }
  }
}

template <class T>
T get_field(const Json& j, const char* section, const char* key) {
  try {
    return section ? j.at(section).at(key).get<T>() : j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field ") + (section ? std::string(section) + "." : "") + key +
                      " has the wrong type");
  }
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  validate(c.dataset);
  auto positive = [](bool ok, const char* field) {
    if (!ok) throw ConfigError(std::string(field) + " is out of range");
  };
  for (int h : c.bnn.hidden) positive(h >= 1, "bnn.hidden");
  positive(c.bnn.samples >= 1, "bnn.samples");
  positive(c.bnn.warmup >= 0, "bnn.warmup");
  positive(c.bnn.learning_rate > 0, "bnn.learning_rate");
  positive(c.bnn.epochs >= 0, "bnn.epochs");
  positive(c.bnn.batch_size >= 1, "bnn.batch_size");
  positive(c.bnn.prior_std > 0, "bnn.prior_std");
  positive(c.bnn.sigma_prior_scale > 0, "bnn.sigma_prior_scale");
  positive(c.bnn.max_tree_depth >= 1, "bnn.max_tree_depth");
  positive(c.bnn.target_accept > 0 && c.bnn.target_accept < 1, "bnn.target_accept");
  for (int h : c.activenet.hidden) positive(h >= 1, "activenet.hidden");
  positive(c.activenet.learning_rate > 0, "activenet.learning_rate");
  positive(c.activenet.epochs >= 0, "activenet.epochs");
  positive(c.activenet.batch_size >= 1, "activenet.batch_size");
  positive(c.grid_resolution >= 2, "grid_resolution");
  positive(c.eval.scenes >= 1, "eval.scenes");
  positive(c.eval.episodes >= 1, "eval.episodes");
  positive(c.eval.force_floor >= 0, "eval.force_floor");
  positive(c.eval.object_max_dim > 0, "eval.object_max_dim");
  for (const auto& m : c.eval.methods)
    if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end())
      throw ConfigError("eval.methods: unknown method " + m);
  for (const auto& m : c.ood.methods)
    if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end())
      throw ConfigError("ood.methods: unknown method " + m);
  positive(!c.ood.masses.empty(), "ood.masses");
  for (double m : c.ood.masses) positive(m > 0, "ood.masses");
  positive(c.ood.offsets >= 1, "ood.offsets");
  positive(c.ood.episodes >= 1, "ood.episodes");
}

/// Missing fields take their defaults; unknown fields and bad types are errors.
inline RunConfig from_json(const Json& given) {
  const Json defaults = to_json(RunConfig{});
  if (!given.is_object()) throw ConfigError("config must be a JSON object");
  detail::check_known_keys(given, defaults, "");
  Json j = defaults;
  j.merge_patch(given);
  using detail::get_field;

  RunConfig c;
  c.seed = get_field<std::uint64_t>(j, nullptr, "seed");
  auto& d = c.dataset;
  d.grasps = get_field<int>(j, "dataset", "grasps");
  d.orientations_per_grasp = get_field<int>(j, "dataset", "orientations_per_grasp");
  d.mass_min = get_field<double>(j, "dataset", "mass_min");
  d.mass_max = get_field<double>(j, "dataset", "mass_max");
  const auto box = get_field<std::vector<double>>(j, "dataset", "offset_box");
  if (box.size() != 3) throw ConfigError("dataset.offset_box must have three entries");
  d.offset_box = {box[0], box[1], box[2]};
  d.max_offset = get_field<double>(j, "dataset", "max_offset");
  d.gravity = get_field<double>(j, "dataset", "gravity");
  d.slip_discard = get_field<double>(j, "dataset", "slip_discard");
  d.bounds.max_angle = get_field<double>(j, "dataset", "max_angle");
  const Json& n = j["dataset"]["noise"];
  d.noise.sigma_force = get_field<double>(n, nullptr, "sigma_force");
  d.noise.sigma_torque = get_field<double>(n, nullptr, "sigma_torque");
  d.noise.slip_enabled = get_field<bool>(n, nullptr, "slip_enabled");
  d.noise.slip_prob = get_field<double>(n, nullptr, "slip_prob");
  d.noise.slip_sigma = get_field<double>(n, nullptr, "slip_sigma");

  auto& b = c.bnn;
  b.hidden = get_field<std::vector<int>>(j, "bnn", "hidden");
  b.noise_head = get_field<bool>(j, "bnn", "noise_head");
  b.samples = get_field<int>(j, "bnn", "samples");
  b.warmup = get_field<int>(j, "bnn", "warmup");
  b.learning_rate = get_field<double>(j, "bnn", "learning_rate");
  b.epochs = get_field<int>(j, "bnn", "epochs");
  b.batch_size = get_field<int>(j, "bnn", "batch_size");
  b.prior_std = get_field<double>(j, "bnn", "prior_std");
  b.sigma_prior_scale = get_field<double>(j, "bnn", "sigma_prior_scale");
  b.max_tree_depth = get_field<int>(j, "bnn", "max_tree_depth");
  b.target_accept = get_field<double>(j, "bnn", "target_accept");

  auto& a = c.activenet;
  a.hidden = get_field<std::vector<int>>(j, "activenet", "hidden");
  a.learning_rate = get_field<double>(j, "activenet", "learning_rate");
  a.epochs = get_field<int>(j, "activenet", "epochs");
  a.batch_size = get_field<int>(j, "activenet", "batch_size");
  a.label_mode = label_mode_from_string(get_field<std::string>(j, "activenet", "label_mode"));

  c.grid_resolution = get_field<int>(j, nullptr, "grid_resolution");
  c.eval.scenes = get_field<int>(j, "eval", "scenes");
  c.eval.episodes = get_field<int>(j, "eval", "episodes");
  c.eval.methods = get_field<std::vector<std::string>>(j, "eval", "methods");
  c.eval.force_floor = get_field<double>(j, "eval", "force_floor");
  c.eval.object_max_dim = get_field<double>(j, "eval", "object_max_dim");
  c.ood.masses = get_field<std::vector<double>>(j, "ood", "masses");
  c.ood.offsets = get_field<int>(j, "ood", "offsets");
  c.ood.episodes = get_field<int>(j, "ood", "episodes");
  c.ood.methods = get_field<std::vector<std::string>>(j, "ood", "methods");
  validate(c);
  return c;
}

/// Parses a config file; `//` and `/* */` comments are allowed.
inline RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

/// Stable fingerprint of the canonical serialized config.
inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

namespace detail {

inline const std::map<std::string, std::string>& config_docs() {
  static const std::map<std::string, std::string> kDocs = {
      {"seed", "master seed; every random stream is derived from it"},
      {"dataset", "synthetic data collection"},
      {"dataset.grasps", "number of grasps (distinct objects/offsets)"},
      {"dataset.orientations_per_grasp", "re-orientations per grasp besides (0, 0)"},
      {"dataset.mass_min", "kg, lower end of the uniform mass range"},
      {"dataset.mass_max", "kg, upper end of the uniform mass range"},
      {"dataset.offset_box", "m, half-widths of the CoM offset box (x, y, z)"},
      {"dataset.max_offset", "m, hard limit on |offset|"},
      {"dataset.gravity", "m/s^2"},
      {"dataset.slip_discard", "m, readings taken after a slip larger than this are dropped"},
      {"dataset.max_angle", "rad, wrist joint limit per axis (default pi/3)"},
      {"dataset.noise", "sensor model"},
      {"dataset.noise.sigma_force", "N, per-axis Gaussian std"},
      {"dataset.noise.sigma_torque", "N m, per-axis Gaussian std"},
      {"dataset.noise.slip_enabled", "enable in-hand slip on re-orientation"},
      {"dataset.noise.slip_prob", "slip probability per re-orientation"},
      {"dataset.noise.slip_sigma", "rad, std of slip rotation about gripper Z"},
      {"bnn", "Bayesian regressor (MAP pretraining + NUTS)"},
      {"bnn.hidden", "hidden layer widths"},
      {"bnn.noise_head", "input-dependent observation noise head"},
      {"bnn.samples", "post-warmup NUTS draws"},
      {"bnn.warmup", "NUTS warmup (step-size adaptation) iterations"},
      {"bnn.learning_rate", "pretraining learning rate"},
      {"bnn.epochs", "pretraining epochs"},
      {"bnn.batch_size", "pretraining mini-batch size"},
      {"bnn.prior_std", "std of the Gaussian weight prior around the MAP weights"},
      {"bnn.sigma_prior_scale", "scale of the half-normal prior on observation std"},
      {"bnn.max_tree_depth", "NUTS maximum tree depth"},
      {"bnn.target_accept", "dual-averaging acceptance target"},
      {"activenet", "action scoring network"},
      {"activenet.hidden", "hidden layer widths"},
      {"activenet.learning_rate", "learning rate"},
      {"activenet.epochs", "training epochs"},
      {"activenet.batch_size", "mini-batch size"},
      {"activenet.label_mode", "\"second\": error of the second estimate; \"fused\": error after fusion"},
      {"grid_resolution", "grid points per axis for action search"},
      {"eval", "benchmark"},
      {"eval.scenes", "test scenes (drawn from a seed namespace disjoint from training)"},
      {"eval.episodes", "episodes per scene"},
      {"eval.methods", "methods to compare"},
      {"eval.force_floor", "N, analytical solution refuses smaller forces"},
      {"eval.object_max_dim", "m, denominator for the relative-error footnote"},
      {"ood", "fixed-offset mass sweep"},
      {"ood.masses", "kg, object masses to test"},
      {"ood.offsets", "number of fixed CoM offsets"},
      {"ood.episodes", "episodes per (mass, offset)"},
      {"ood.methods", "methods to run"},
  };
  return kDocs;
}

inline void write_commented(std::ostringstream& out, const Json& j, const std::string& path, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  out << "{\n";
  std::size_t i = 0;
  for (auto it = j.begin(); it != j.end(); ++it, ++i) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    const auto doc = config_docs().find(p);
    if (doc != config_docs().end()) out << pad << "  // " << doc->second << "\n";
    out << pad << "  \"" << it.key() << "\": ";
    if (it.value().is_object())
      write_commented(out, it.value(), p, indent + 2);
    else
      out << it.value().dump();
    out << (i + 1 < j.size() ? ",\n" : "\n");
  }
  out << pad << "}";
}

}  // namespace detail

/// The config as JSON with an explanatory comment above every field.
inline std::string commented_config(const RunConfig& c) {
  std::ostringstream out;
  detail::write_commented(out, to_json(c), "", 0);
  out << "\n";
  return out.str();
}

}  // namespace ugraph
