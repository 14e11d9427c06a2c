#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ugraph/config.hpp"
#include "ugraph/dataset_io.hpp"
#include "ugraph/evaluation.hpp"
#include "ugraph/model_io.hpp"

// Subcommand bodies. Each one reads and writes files under an output directory
// and reports progress on `log`; exit-code mapping lives in the executable.

namespace ugraph::cmd {

namespace fs = std::filesystem;

inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kBnnFile = "bnn_model.json";
inline constexpr const char* kActiveNetFile = "activenet_model.json";
inline constexpr const char* kEvalCsv = "eval_episodes.csv";
inline constexpr const char* kEvalSummary = "eval_summary.txt";
inline constexpr const char* kOodCsv = "ood_episodes.csv";
inline constexpr const char* kOodSummary = "ood_summary.txt";

// Hardware figures from the original study; printed for orientation only.
inline constexpr double kHardwareReferenceErrorMm = 14.7;
inline constexpr double kHardwareReferenceRelative = 0.076;

/// Input overrides; empty paths mean "the default file inside the output dir".
struct Paths {
  fs::path out = ".";
  fs::path dataset;
  fs::path bnn;
  fs::path activenet;

  fs::path dataset_or_default() const { return dataset.empty() ? out / kDatasetFile : dataset; }
  fs::path bnn_or_default() const { return bnn.empty() ? out / kBnnFile : bnn; }
  fs::path activenet_or_default() const { return activenet.empty() ? out / kActiveNetFile : activenet; }
};

inline std::string provenance(const char* command, const RunConfig& cfg) {
  return std::string("ugraph ") + command + " seed=" + std::to_string(cfg.seed) +
         " config_hash=" + config_hash(cfg);
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

inline EvalSetup eval_setup(const RunConfig& cfg) {
  EvalSetup s;
  s.seed = cfg.seed;
  s.noise = cfg.dataset.noise;
  s.bounds = cfg.dataset.bounds;
  s.grid_resolution = cfg.grid_resolution;
  s.force_floor = cfg.eval.force_floor;
  return s;
}

inline bool needs_activenet(const std::vector<std::string>& methods) {
  return std::find(methods.begin(), methods.end(), method::kUGraph) != methods.end();
}

inline bool needs_bnn(const std::vector<std::string>& methods) {
  for (const auto& m : methods)
    if (m != method::kAnalytical) return true;
  return false;
}

// --- simulate --------------------------------------------------------------

inline fs::path simulate(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  const auto records = generate_dataset(cfg.dataset, cfg.seed);
  Json header;
  header["seed"] = cfg.seed;
  header["config"] = to_json(cfg);
  const fs::path file = paths.out / kDatasetFile;
  write_dataset(file, header, records);
  log << "wrote " << records.size() << " records to " << file.string() << "\n";
  return file;
}

// --- train-bnn -------------------------------------------------------------

inline fs::path train_bnn_cmd(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  const auto ds = read_dataset(paths.dataset_or_default());
  log << "training BNN on " << ds.records.size() << " records (" << cfg.bnn.samples << " samples, "
      << cfg.bnn.warmup << " warmup)\n";
  const PosteriorSamples ps = train_bnn(ds.records, cfg.bnn, cfg.seed);
  const auto& d = ps.diagnostics;
  const fs::path file = paths.out / kBnnFile;
  write_file_atomic(file, serialize_bnn(ps, cfg));
  const double rate = cfg.bnn.samples ? static_cast<double>(d.divergences) / cfg.bnn.samples : 0.0;
  log << "map_mse " << fixed(ps.map_mse, 4) << "  accept " << fixed(d.mean_accept_stat, 3) << "  step "
      << std::setprecision(3) << d.step_size << "  depth " << fixed(d.mean_tree_depth, 2) << "  divergences "
      << d.divergences << "/" << cfg.bnn.samples << " (" << fixed(100 * rate, 1) << "%)  grad evals "
      << d.gradient_evals << "\n";
  if (rate > 0.05) log << "warning: divergence rate above 5%\n";
  log << "wrote " << file.string() << "\n";
  return file;
}

// --- train-active ----------------------------------------------------------

inline fs::path train_active_cmd(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  const auto ds = read_dataset(paths.dataset_or_default());
  const PosteriorSamples bnn = load_bnn(paths.bnn_or_default());
  const auto examples = make_training_labels(bnn, ds.records, cfg.activenet.label_mode);
  const Json labels = label_summary(examples, cfg.activenet.label_mode);
  log << "labels: " << examples.size() << " examples, mean " << fixed(1000 * labels["mean_m"].get<double>())
      << " mm, sd " << fixed(1000 * labels["std_m"].get<double>()) << " mm, range ["
      << fixed(1000 * labels["min_m"].get<double>()) << ", " << fixed(1000 * labels["max_m"].get<double>())
      << "] mm (" << to_string(cfg.activenet.label_mode) << ")\n";
  const ActiveNetModel model = train_activenet(examples, cfg.activenet, cfg.seed);
  const fs::path file = paths.out / kActiveNetFile;
  write_file_atomic(file, serialize_activenet(model, cfg, labels));
  log << "final loss " << fixed(model.final_loss, 4) << "\nwrote " << file.string() << "\n";
  return file;
}

// --- eval ------------------------------------------------------------------

struct LoadedModels {
  std::optional<PosteriorSamples> bnn;
  std::optional<ActiveNetModel> activenet;

  Models view() const { return {bnn ? &*bnn : nullptr, activenet ? &*activenet : nullptr}; }
};

inline LoadedModels load_models(const std::vector<std::string>& methods, const Paths& paths) {
  LoadedModels m;
  if (needs_bnn(methods)) m.bnn = load_bnn(paths.bnn_or_default());
  if (needs_activenet(methods)) m.activenet = load_activenet(paths.activenet_or_default());
  return m;
}

inline std::string eval_footer(const EvalReport& report, const RunConfig& cfg) {
  std::ostringstream out;
  out << "\n";
  const bool has_ugraph =
      std::find(report.methods.begin(), report.methods.end(), method::kUGraph) != report.methods.end();
  if (has_ugraph) {
    const double mean = report.of(method::kUGraph).mean_total_error;
    out << "U-GRAPH relative error: " << fixed(100 * mean / cfg.eval.object_max_dim, 1)
        << "% of a " << fixed(1000 * cfg.eval.object_max_dim, 0) << " mm object\n";
  }
  out << "hardware reference (not reproduced in simulation): " << fixed(kHardwareReferenceErrorMm, 1)
      << " mm, " << fixed(100 * kHardwareReferenceRelative, 1) << "%\n";
  out << "paired noise across methods: yes\n";
  out << "seed " << cfg.seed << ", config hash " << config_hash(cfg) << "\n";
  out << "generated " << utc_timestamp() << "\n";
  return out.str();
}

inline EvalReport eval_cmd(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  const LoadedModels models = load_models(cfg.eval.methods, paths);
  const auto scenes = make_test_scenes(cfg.dataset, cfg.eval.scenes, cfg.seed);
  EvalReport report = evaluate(cfg.eval.methods, scenes, cfg.eval.episodes, models.view(), eval_setup(cfg));
  write_file_atomic(paths.out / kEvalCsv, episodes_csv(report, provenance("eval", cfg)));
  std::ostringstream summary;
  summary << "Mean absolute error (mm) over " << scenes.size() << " scenes x " << cfg.eval.episodes
          << " episodes\n\n"
          << summary_table(report) << "\nPer-scene mean total error (mm)\n\n"
          << per_scene_table(report) << eval_footer(report, cfg);
  write_file_atomic(paths.out / kEvalSummary, summary.str());
  log << summary_table(report) << "wrote " << (paths.out / kEvalCsv).string() << " and "
      << (paths.out / kEvalSummary).string() << "\n";
  return report;
}

// --- ood-study -------------------------------------------------------------

/// Offsets held fixed across the mass sweep.
inline std::vector<Vec3> ood_offsets(const RunConfig& cfg) {
  std::vector<Vec3> out;
  for (int i = 0; i < cfg.ood.offsets; ++i) {
    Rng rng = derive_rng(cfg.seed, Stream::kOodScenes, {static_cast<std::uint64_t>(i)});
    out.push_back(sample_scene(cfg.dataset, rng).com_offset_gripper);
  }
  return out;
}

inline OodReport ood_cmd(const RunConfig& cfg, const Paths& paths, std::ostream& log) {
  const LoadedModels models = load_models(cfg.ood.methods, paths);
  const OodReport report = ood_study(cfg.ood.methods, cfg.ood.masses, ood_offsets(cfg), cfg.ood.episodes,
                                     cfg.dataset.mass_min, cfg.dataset.mass_max, models.view(), eval_setup(cfg),
                                     cfg.dataset.gravity);
  write_file_atomic(paths.out / kOodCsv, episodes_csv(report.detail, provenance("ood-study", cfg)));
  std::ostringstream summary;
  summary << "Mean absolute error (mm) by object mass, " << cfg.ood.offsets << " fixed offsets x "
          << cfg.ood.episodes << " episodes\ntraining mass range " << fixed(1000 * cfg.dataset.mass_min) << " - "
          << fixed(1000 * cfg.dataset.mass_max) << " g\n\n"
          << ood_table(report) << "\n";
  for (const auto& m : cfg.ood.methods) {
    summary << m << ": in-distribution " << fixed(1000 * report.mean_error(m, true)) << " mm, OOD "
            << fixed(1000 * report.mean_error(m, false)) << " mm\n";
  }
  summary << "\nseed " << cfg.seed << ", config hash " << config_hash(cfg) << "\ngenerated " << utc_timestamp()
          << "\n";
  write_file_atomic(paths.out / kOodSummary, summary.str());
  log << ood_table(report) << "wrote " << (paths.out / kOodCsv).string() << " and "
      << (paths.out / kOodSummary).string() << "\n";
  return report;
}

}  // namespace ugraph::cmd
