#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ugraph/pipeline.hpp"

namespace ugraph {

struct EvalSetup {
  std::uint64_t seed = 0;
  NoiseModel noise;
  ActionBounds bounds;
  int grid_resolution = 21;
  double force_floor = kDefaultForceFloor;
};

/// Trained models available to the methods. Methods that need a missing model throw.
struct Models {
  const PosteriorSamples* bnn = nullptr;
  const ActiveNetModel* activenet = nullptr;
};

struct TestScene {
  int id = 0;
  RigidGraspScene scene;
};

struct EpisodeRow {
  int scene_id = 0;
  int episode = 0;       // within scene
  std::uint64_t episode_id = 0;
  double mass = 0.0;
  bool ok = true;
  std::string failure;
  EpisodeResult result;
};

struct MethodSummary {
  std::string method;
  int episodes = 0;
  int failures = 0;
  Vec3 mean_abs_error = Vec3::Zero();  // m
  double mean_total_error = 0.0;       // m, Euclidean
  double std_total_error = 0.0;        // across episodes
  Vec3 mean_pred_std = Vec3::Zero();
  bool has_pred_std = false;
};

struct EvalReport {
  std::vector<std::string> methods;
  std::vector<EpisodeRow> rows;
  std::vector<MethodSummary> summary;

  const MethodSummary& of(const std::string& m) const {
    for (const auto& s : summary)
      if (s.method == m) return s;
    throw std::out_of_range("no summary for method " + m);
  }
};

inline const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> kAll = {method::kUGraph, method::kOneGrasp,
                                                method::kRandomRotate, method::kAnalytical};
  return kAll;
}

inline EpisodeResult run_method(const std::string& name, WrenchSource& source, const Models& models,
                                const EvalSetup& setup, std::uint64_t episode_id) {
  auto need_bnn = [&]() -> const PosteriorSamples& {
    if (!models.bnn) throw std::invalid_argument(name + " requires a trained BNN");
    return *models.bnn;
  };
  if (name == method::kUGraph) {
    if (!models.activenet) throw std::invalid_argument(name + " requires a trained ActiveNet");
    return run_ugraph(source, need_bnn(), *models.activenet, setup.grid_resolution, setup.bounds);
  }
  if (name == method::kOneGrasp) return run_one_grasp(source, need_bnn());
  if (name == method::kRandomRotate) {
    Rng rng = derive_rng(setup.seed, Stream::kRandomAction, {episode_id});
    return run_random_rotate(source, need_bnn(), rng, setup.bounds);
  }
  if (name == method::kAnalytical) return run_analytical(source, setup.force_floor);
  throw std::invalid_argument("unknown method: " + name);
}

inline std::vector<MethodSummary> summarize(const std::vector<std::string>& methods,
                                            const std::vector<EpisodeRow>& rows) {
  std::vector<MethodSummary> out;
  for (const auto& m : methods) {
    MethodSummary s;
    s.method = m;
    std::vector<double> totals;
    for (const auto& r : rows) {
      if (r.result.method != m) continue;
      ++s.episodes;
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      s.mean_abs_error += r.result.abs_error;
      totals.push_back(r.result.total_error());
      if (r.result.estimate.std_defined) {
        s.mean_pred_std += r.result.estimate.std;
        s.has_pred_std = true;
      }
    }
    const auto n = static_cast<double>(totals.size());
    if (n > 0) {
      s.mean_abs_error /= n;
      s.mean_pred_std /= n;
      for (double t : totals) s.mean_total_error += t / n;
      for (double t : totals) s.std_total_error += (t - s.mean_total_error) * (t - s.mean_total_error) / n;
      s.std_total_error = std::sqrt(s.std_total_error);
    }
    out.push_back(s);
  }
  return out;
}

/// Runs every method on every (scene, episode). Methods share the episode's noise
/// streams, so the comparison is paired. Insufficient-signal failures are recorded
/// per row and excluded from the averages.
inline EvalReport evaluate(const std::vector<std::string>& methods, const std::vector<TestScene>& scenes,
                           int episodes_per_scene, const Models& models, const EvalSetup& setup) {
  if (scenes.empty()) throw std::invalid_argument("evaluation needs at least one scene");
  if (episodes_per_scene < 1) throw std::invalid_argument("episodes_per_scene must be at least 1");
  EvalReport report;
  report.methods = methods;
  for (const auto& scene : scenes) {
    for (int e = 0; e < episodes_per_scene; ++e) {
      const auto episode_id = static_cast<std::uint64_t>(scene.id) * static_cast<std::uint64_t>(episodes_per_scene) +
                              static_cast<std::uint64_t>(e);
      for (const auto& m : methods) {
        EpisodeRow row;
        row.scene_id = scene.id;
        row.episode = e;
        row.episode_id = episode_id;
        row.mass = scene.scene.mass;
        SimulatedWrenchSource source(scene.scene, setup.noise, setup.seed, episode_id, setup.bounds);
        try {
          row.result = run_method(m, source, models, setup, episode_id);
        } catch (const InsufficientSignalError& err) {
          row.ok = false;
          row.failure = err.what();
          row.result.method = m;
          row.result.true_offset = scene.scene.com_offset_gripper;
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.summary = summarize(methods, report.rows);
  return report;
}

/// Scenes drawn like training grasps but from the test seed namespace.
inline std::vector<TestScene> make_test_scenes(const DatasetConfig& c, int count, std::uint64_t seed) {
  validate(c);
  std::vector<TestScene> scenes;
  for (int i = 0; i < count; ++i) {
    Rng rng = derive_rng(seed, Stream::kTestScenes, {static_cast<std::uint64_t>(i)});
    scenes.push_back({i, sample_scene(c, rng)});
  }
  return scenes;
}

// --- rendering -------------------------------------------------------------

inline std::string episodes_csv(const EvalReport& report, const std::string& provenance) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "# " << provenance << "\n";
  out << "method,scene,episode,mass_kg,true_dx,true_dy,true_dz,est_dx,est_dy,est_dz,"
         "std_dx,std_dy,std_dz,err_dx,err_dy,err_dz,err_total,theta1_2,theta2_2,ok\n";
  for (const auto& r : report.rows) {
    const auto& e = r.result;
    out << e.method << ',' << r.scene_id << ',' << r.episode << ',' << r.mass;
    for (int k = 0; k < 3; ++k) out << ',' << e.true_offset[k];
    for (int k = 0; k < 3; ++k) out << ',' << (r.ok ? e.estimate.mean[k] : NAN);
    for (int k = 0; k < 3; ++k) out << ',' << (r.ok && e.estimate.std_defined ? e.estimate.std[k] : NAN);
    for (int k = 0; k < 3; ++k) out << ',' << (r.ok ? e.abs_error[k] : NAN);
    out << ',' << (r.ok ? e.total_error() : NAN);
    if (e.actions.size() > 1)
      out << ',' << e.actions[1].theta1 << ',' << e.actions[1].theta2;
    else
      out << ",,";
    out << ',' << (r.ok ? 1 : 0) << "\n";
  }
  return out.str();
}

inline std::string fixed(double v, int prec = 1) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

/// Aligned method x axis table of mean absolute error in millimeters.
inline std::string summary_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Method" << std::right << std::setw(8) << "X" << std::setw(8) << "Y"
      << std::setw(8) << "Z" << std::setw(10) << "Total" << std::setw(10) << "SD(tot)" << std::setw(9)
      << "StdX" << std::setw(9) << "StdY" << std::setw(9) << "StdZ" << std::setw(7) << "Fail" << "\n";
  std::vector<MethodSummary> ranked = report.summary;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.mean_total_error < b.mean_total_error; });
  for (const auto& s : ranked) {
    out << std::left << std::setw(22) << s.method << std::right;
    for (int k = 0; k < 3; ++k) out << std::setw(8) << fixed(1000 * s.mean_abs_error[k]);
    out << std::setw(10) << fixed(1000 * s.mean_total_error) << std::setw(10) << fixed(1000 * s.std_total_error);
    for (int k = 0; k < 3; ++k) out << std::setw(9) << (s.has_pred_std ? fixed(1000 * s.mean_pred_std[k]) : "-");
    out << std::setw(7) << s.failures << "\n";
  }
  return out.str();
}

/// Mean total error (mm) per method and scene.
inline std::string per_scene_table(const EvalReport& report) {
  std::map<int, std::map<std::string, std::pair<double, int>>> acc;
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    auto& cell = acc[r.scene_id][r.result.method];
    cell.first += r.result.total_error();
    cell.second += 1;
  }
  std::ostringstream out;
  out << std::left << std::setw(8) << "Scene";
  for (const auto& m : report.methods) out << std::right << std::setw(22) << m;
  out << "\n";
  for (const auto& [scene, cells] : acc) {
    out << std::left << std::setw(8) << scene << std::right;
    for (const auto& m : report.methods) {
      auto it = cells.find(m);
      out << std::setw(22) << (it == cells.end() ? "-" : fixed(1000 * it->second.first / it->second.second));
    }
    out << "\n";
  }
  return out.str();
}

// --- weight study ----------------------------------------------------------

struct OodRow {
  double mass = 0.0;
  bool in_distribution = true;
  MethodSummary summary;
};

struct OodReport {
  std::vector<OodRow> rows;
  EvalReport detail;

  /// Mean Euclidean error over rows of the given distribution class for one method.
  double mean_error(const std::string& m, bool in_distribution) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.summary.method == m && r.in_distribution == in_distribution) {
        sum += r.summary.mean_total_error;
        ++n;
      }
    return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
};

/// Holds CoM offsets fixed and sweeps the object mass. A mass is in-distribution
/// when it lies inside the training mass range.
inline OodReport ood_study(const std::vector<std::string>& methods, const std::vector<double>& masses,
                           const std::vector<Vec3>& offsets, int episodes, double train_mass_min,
                           double train_mass_max, const Models& models, const EvalSetup& setup,
                           double gravity = 9.81) {
  if (masses.empty() || offsets.empty()) throw std::invalid_argument("weight study needs masses and offsets");
  OodReport report;
  for (std::size_t mi = 0; mi < masses.size(); ++mi) {
    std::vector<TestScene> scenes;
    for (std::size_t oi = 0; oi < offsets.size(); ++oi)
      scenes.push_back({static_cast<int>(mi * offsets.size() + oi), {masses[mi], offsets[oi], gravity}});
    EvalReport part = evaluate(methods, scenes, episodes, models, setup);
    for (const auto& s : part.summary)
      report.rows.push_back({masses[mi], masses[mi] >= train_mass_min && masses[mi] <= train_mass_max, s});
    report.detail.methods = methods;
    for (auto& r : part.rows) report.detail.rows.push_back(std::move(r));
  }
  report.detail.summary = summarize(methods, report.detail.rows);
  return report;
}

inline std::string ood_table(const OodReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Method" << std::right << std::setw(12) << "Mass (g)" << std::setw(6)
      << "OOD" << std::setw(8) << "X" << std::setw(8) << "Y" << std::setw(8) << "Z" << std::setw(10) << "Total"
      << "\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(22) << r.summary.method << std::right << std::setw(12) << fixed(1000 * r.mass)
        << std::setw(6) << (r.in_distribution ? "" : "yes");
    for (int k = 0; k < 3; ++k) out << std::setw(8) << fixed(1000 * r.summary.mean_abs_error[k]);
    out << std::setw(10) << fixed(1000 * r.summary.mean_total_error) << "\n";
  }
  return out.str();
}

}  // namespace ugraph
