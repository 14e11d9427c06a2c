#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ugraph/active_net.hpp"
#include "ugraph/bnn.hpp"
#include "ugraph/config.hpp"
#include "ugraph/io.hpp"

// Model container: {"format", "seed", "config", "model"}. Doubles are written in
// shortest round-trip form, so save -> load -> save is byte-stable.

namespace ugraph {

inline constexpr const char* kBnnFormat = "ugraph.bnn.v1";
inline constexpr const char* kActiveNetFormat = "ugraph.activenet.v1";

namespace detail {

inline Json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Json arch_json(const MlpArchitecture& a) {
  return {{"input_dim", a.input_dim}, {"hidden", a.hidden}, {"output_dim", a.output_dim}};
}

inline MlpArchitecture arch_from(const nlohmann::json& j) {
  MlpArchitecture a{j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
                    j.at("output_dim").get<int>()};
  a.validate();
  return a;
}

inline Json norm_json(const NormalizationStats& n) {
  return {{"input_mean", vec_json(n.input.mean)},
          {"input_std", vec_json(n.input.std)},
          {"output_mean", vec_json(n.output.mean)},
          {"output_std", vec_json(n.output.std)}};
}

inline NormalizationStats norm_from(const nlohmann::json& j) {
  NormalizationStats n;
  n.input = {vec_from(j.at("input_mean")), vec_from(j.at("input_std"))};
  n.output = {vec_from(j.at("output_mean")), vec_from(j.at("output_std"))};
  return n;
}

inline Json container(const char* format, const RunConfig& cfg, Json model) {
  Json j;
  j["format"] = format;
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  j["model"] = std::move(model);
  return j;
}

inline nlohmann::json open_container(const std::string& text, const char* format) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != format)
    throw IoError(std::string("expected a model file with format tag ") + format);
  return j;
}

}  // namespace detail

inline std::string serialize_bnn(const PosteriorSamples& ps, const RunConfig& cfg) {
  using detail::vec_json;
  Json m;
  m["architecture"] = detail::arch_json(ps.spec.arch);
  m["noise_head"] = ps.spec.noise_head;
  m["normalization"] = detail::norm_json(ps.normalization);
  std::vector<double> flat;
  flat.reserve(ps.samples.size() * static_cast<std::size_t>(ps.spec.weight_count()));
  for (const auto& s : ps.samples) flat.insert(flat.end(), s.data(), s.data() + s.size());
  m["samples"] = {{"rows", ps.samples.size()}, {"cols", ps.spec.weight_count()}, {"data", flat}};
  Json sig = Json::array();
  for (const auto& s : ps.obs_sigma) sig.push_back({s.x(), s.y(), s.z()});
  m["obs_sigma_samples"] = sig;
  const auto& d = ps.diagnostics;
  m["diagnostics"] = {{"divergences", d.divergences},
                      {"warmup_divergences", d.warmup_divergences},
                      {"mean_accept_stat", d.mean_accept_stat},
                      {"step_size", d.step_size},
                      {"mean_tree_depth", d.mean_tree_depth},
                      {"gradient_evals", d.gradient_evals},
                      {"map_mse", ps.map_mse}};
  return detail::container(kBnnFormat, cfg, std::move(m)).dump() + "\n";
}

inline PosteriorSamples parse_bnn(const std::string& text) {
  const auto j = detail::open_container(text, kBnnFormat);
  try {
    const auto& m = j.at("model");
    PosteriorSamples ps;
    ps.spec = {detail::arch_from(m.at("architecture")), m.at("noise_head").get<bool>()};
    ps.normalization = detail::norm_from(m.at("normalization"));
    const auto rows = m.at("samples").at("rows").get<std::size_t>();
    const auto cols = m.at("samples").at("cols").get<Eigen::Index>();
    const auto flat = m.at("samples").at("data").get<std::vector<double>>();
    if (cols != ps.spec.weight_count() || flat.size() != rows * static_cast<std::size_t>(cols))
      throw IoError("model sample matrix does not match its architecture");
    for (std::size_t r = 0; r < rows; ++r)
      ps.samples.emplace_back(Eigen::Map<const VectorXd>(flat.data() + r * static_cast<std::size_t>(cols), cols));
    for (const auto& s : m.at("obs_sigma_samples")) ps.obs_sigma.emplace_back(s[0].get<double>(), s[1].get<double>(), s[2].get<double>());
    if (ps.obs_sigma.size() != ps.samples.size()) throw IoError("obs_sigma sample count mismatch");
    const auto& d = m.at("diagnostics");
    ps.diagnostics.divergences = d.at("divergences").get<int>();
    ps.diagnostics.warmup_divergences = d.at("warmup_divergences").get<int>();
    ps.diagnostics.mean_accept_stat = d.at("mean_accept_stat").get<double>();
    ps.diagnostics.step_size = d.at("step_size").get<double>();
    ps.diagnostics.mean_tree_depth = d.at("mean_tree_depth").get<double>();
    ps.diagnostics.gradient_evals = d.at("gradient_evals").get<long long>();
    ps.map_mse = d.at("map_mse").get<double>();
    return ps;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed BNN model: ") + e.what());
  }
}

inline std::string serialize_activenet(const ActiveNetModel& model, const RunConfig& cfg, Json label_summary = {}) {
  Json m;
  m["architecture"] = detail::arch_json(model.arch);
  m["normalization"] = detail::norm_json(model.normalization);
  m["weights"] = detail::vec_json(model.weights);
  m["final_loss"] = model.final_loss;
  if (!label_summary.is_null()) m["labels"] = std::move(label_summary);
  return detail::container(kActiveNetFormat, cfg, std::move(m)).dump() + "\n";
}

inline ActiveNetModel parse_activenet(const std::string& text) {
  const auto j = detail::open_container(text, kActiveNetFormat);
  try {
    const auto& m = j.at("model");
    ActiveNetModel model;
    model.arch = detail::arch_from(m.at("architecture"));
    model.normalization = detail::norm_from(m.at("normalization"));
    model.weights = detail::vec_from(m.at("weights"));
    model.final_loss = m.at("final_loss").get<double>();
    check_weights(model.arch, model.weights);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed ActiveNet model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("malformed ActiveNet model: ") + e.what());
  }
}

inline PosteriorSamples load_bnn(const std::filesystem::path& p) { return parse_bnn(read_file(p)); }
inline ActiveNetModel load_activenet(const std::filesystem::path& p) { return parse_activenet(read_file(p)); }

/// Summary statistics of an ActiveNet label set.
inline Json label_summary(const std::vector<ActionScoreExample>& ex, LabelMode mode) {
  double mean = 0, mn = std::numeric_limits<double>::infinity(), mx = 0;
  for (const auto& e : ex) {
    mean += e.score;
    mn = std::min(mn, e.score);
    mx = std::max(mx, e.score);
  }
  if (!ex.empty()) mean /= static_cast<double>(ex.size());
  double var = 0;
  for (const auto& e : ex) var += (e.score - mean) * (e.score - mean);
  if (!ex.empty()) var /= static_cast<double>(ex.size());
  return {{"count", ex.size()}, {"mode", to_string(mode)}, {"mean_m", mean},
          {"std_m", std::sqrt(var)}, {"min_m", ex.empty() ? 0.0 : mn}, {"max_m", mx}};
}

}  // namespace ugraph
