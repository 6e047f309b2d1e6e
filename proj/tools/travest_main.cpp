#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "travest/checkpoint.hpp"
#include "travest/dataset.hpp"
#include "travest/errors.hpp"
#include "travest/evaluator.hpp"
#include "travest/mapper.hpp"
#include "travest/pointcloud_io.hpp"
#include "travest/run_config.hpp"
#include "travest/trainer.hpp"

namespace fs = std::filesystem;
using travest::RunConfig;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw travest::IoError("cannot create output directory: " + dir);
}

// Every command mirrors its fully resolved settings next to its outputs.
void echo_config(const RunConfig& cfg, const std::string& out_dir) {
  travest::save_run_config(cfg, (fs::path(out_dir) / "config_resolved.json").string());
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) cfg = travest::load_run_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  return cfg;
}

travest::GridConfig parse_grid_spec(const std::string& spec, const travest::GridConfig& base) {
  // "8x8:0.15" -> width_m x height_m : resolution, centered on the robot
  double w_m = 0.0, h_m = 0.0, res = 0.0;
  if (std::sscanf(spec.c_str(), "%lfx%lf:%lf", &w_m, &h_m, &res) != 3 || w_m <= 0.0 ||
      h_m <= 0.0 || res <= 0.0)
    throw travest::ConfigError("--grid expects WIDTHxHEIGHT:RESOLUTION, e.g. 8x8:0.15");
  travest::GridConfig g = base;
  g.resolution = res;
  g.width_cells = static_cast<int>(std::lround(w_m / res));
  g.height_cells = static_cast<int>(std::lround(h_m / res));
  g.origin_x = -w_m / 2.0;
  g.origin_y = -h_m / 2.0;
  return g;
}

void write_train_log(const std::vector<travest::EpochRow>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw travest::IoError("cannot write training log: " + path);
  out << "epoch,anomaly,recon,regression,total,r_p,N_n,N_a\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << fmt_g17(row.loss.anomaly) << ',' << fmt_g17(row.loss.recon) << ','
        << fmt_g17(row.loss.regression) << ',' << fmt_g17(row.loss.total) << ','
        << fmt_g17(row.r_p) << ',' << row.n_n << ',' << row.n_a << '\n';
  }
  if (!out) throw travest::IoError("failed writing training log: " + path);
}

int cmd_gen(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  travest::write_dataset(cfg, out_dir);
  echo_config(cfg, out_dir);
  std::cout << "wrote " << cfg.n_scans << " scans to " << out_dir << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& data_dir, const std::string& out_dir) {
  const travest::Dataset ds = travest::load_dataset(data_dir);
  cfg.grid = ds.grid;
  cfg.score = ds.score;
  cfg.profile = ds.profile;
  ensure_dir(out_dir);
  echo_config(cfg, out_dir);

  travest::TrainResult result =
      travest::fit(ds.samples, ds.grid, ds.anomalous, cfg.train, &std::cout);
  write_train_log(result.log, (fs::path(out_dir) / "train_log.csv").string());

  travest::Checkpoint ck{std::move(result.model), std::move(result.adam)};
  const std::string ck_path = (fs::path(out_dir) / "checkpoint.gsnn").string();
  travest::save_checkpoint(ck, ck_path);
  std::cout << "best epoch " << ck.model.best_epoch << " (val metric "
            << fmt_g17(ck.model.best_val_metric) << "), checkpoint at " << ck_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ck_path, const std::string& data_dir, const std::string& out_dir,
             const std::string& split, bool macro, int jobs) {
  travest::Checkpoint ck = travest::load_checkpoint(ck_path);
  const travest::Dataset ds = travest::load_dataset(data_dir);
  ensure_dir(out_dir);

  // Scan selection.  "train"/"val" reproduce the split the checkpoint was
  // trained with (same fraction and seed), so "val" is the held-out set.
  std::vector<int> scan_ids;
  if (split == "all") {
    scan_ids.resize(ds.samples.size());
    for (std::size_t s = 0; s < ds.samples.size(); ++s) scan_ids[s] = static_cast<int>(s);
  } else if (split == "train" || split == "val") {
    auto [train_ids, val_ids] =
        travest::split_dataset(static_cast<int>(ds.samples.size()),
                               ck.model.train_cfg.train_frac, ck.model.train_cfg.seed);
    scan_ids = (split == "train") ? train_ids : val_ids;
    std::sort(scan_ids.begin(), scan_ids.end());
  } else {
    throw travest::ConfigError("eval split must be all, train, or val; got '" + split + "'");
  }

  const int n = static_cast<int>(scan_ids.size());
  std::vector<travest::Metrics> per_scan(static_cast<std::size_t>(n));
  std::vector<travest::Checkpoint> workers;  // one model copy per extra thread
  jobs = std::max(1, jobs);
  jobs = std::min(jobs, std::max(1, n));

  auto eval_range = [&](travest::Checkpoint& worker, int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      const travest::Sample& sample =
          ds.samples[static_cast<std::size_t>(scan_ids[static_cast<std::size_t>(s)])];
      const travest::LabelGrid truth =
          travest::project_labels(sample.cloud, ds.anomalous, ds.grid);
      const travest::LabelGrid pred = travest::predict_grid(worker.model, sample.cloud, ds.grid);
      per_scan[static_cast<std::size_t>(s)] = travest::score(pred, truth);
    }
  };

  if (jobs <= 1) {
    eval_range(ck, 0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + jobs - 1) / jobs;
    workers.resize(static_cast<std::size_t>(jobs), ck);
    for (int t = 0; t < jobs; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, t, lo, hi] { eval_range(workers[static_cast<std::size_t>(t)], lo, hi); });
    }
    for (auto& th : pool) th.join();
  }

  const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
  std::ofstream csv(csv_path);
  if (!csv) throw travest::IoError("cannot write metrics: " + csv_path);
  csv << "scan_id,precision,recall,f1,tp,fp,fn,tn\n";
  for (int s = 0; s < n; ++s) {
    const auto& m = per_scan[static_cast<std::size_t>(s)];
    csv << scan_ids[static_cast<std::size_t>(s)] << ',' << fmt_g17(m.precision) << ','
        << fmt_g17(m.recall) << ',' << fmt_g17(m.f1) << ',' << m.tp << ',' << m.fp << ',' << m.fn
        << ',' << m.tn << '\n';
  }
  if (!csv) throw travest::IoError("failed writing metrics: " + csv_path);

  auto metrics_json = [](const travest::Metrics& m) {
    return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
                          {"tn", m.tn}};
  };
  const travest::Metrics micro = travest::micro_average(per_scan);
  nlohmann::json agg{{"seed", ck.model.train_cfg.seed},
                     {"split", split},
                     {"scans", n},
                     {"micro", metrics_json(micro)}};
  if (macro) agg["macro"] = metrics_json(travest::macro_average(per_scan));
  const std::string json_path = (fs::path(out_dir) / "metrics.json").string();
  std::ofstream js(json_path);
  if (!js) throw travest::IoError("cannot write metrics summary: " + json_path);
  js << agg.dump(2) << "\n";

  std::cout << "micro precision " << fmt_g17(micro.precision) << " recall "
            << fmt_g17(micro.recall) << " f1 " << fmt_g17(micro.f1) << " over " << n
            << " scans\n";
  return 0;
}

int cmd_map(const std::string& ck_path, const std::string& cloud_path, const std::string& out_dir,
            double threshold, const std::string& grid_spec, bool anomaly_override) {
  travest::Checkpoint ck = travest::load_checkpoint(ck_path);
  const travest::PointCloud cloud = travest::load_cloud(cloud_path);
  travest::GridConfig grid = ck.model.grid;
  if (!grid_spec.empty()) grid = parse_grid_spec(grid_spec, grid);
  ensure_dir(out_dir);

  const travest::TraversabilityMap map =
      travest::infer_map(ck.model, cloud, grid, anomaly_override);
  const travest::Costmap cost = travest::to_costmap(map, threshold);

  const fs::path out(out_dir);
  travest::save_map_csv(map, (out / "traversability.csv").string());
  travest::save_costmap_pgm(cost, (out / "costmap.pgm").string(), (out / "costmap.yaml").string(),
                            threshold);

  RunConfig cfg;
  cfg.grid = grid;
  cfg.train = ck.model.train_cfg;
  cfg.paths.checkpoint = ck_path;
  cfg.paths.cloud = cloud_path;
  cfg.paths.out_dir = out_dir;
  echo_config(cfg, out_dir);

  long free_cells = 0, occ = 0, unk = 0;
  for (const auto c : cost.cells) {
    if (c == travest::CostCell::free)
      ++free_cells;
    else if (c == travest::CostCell::occupied)
      ++occ;
    else
      ++unk;
  }
  std::cout << "costmap: " << free_cells << " free, " << occ << " occupied, " << unk
            << " unknown cells (threshold " << fmt_g17(threshold) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised traversability pipeline: generate synthetic datasets, train the "
               "anomaly-aware network, evaluate it, and export planner costmaps."};
  app.require_subcommand(1);

  CommonFlags common;
  std::string out_dir = ".";
  std::string data_dir;
  std::string ck_path;
  std::string cloud_path;
  std::string loss_mode;
  std::string grid_spec;
  std::string profile_name;
  bool no_flip = false, no_yaw = false, no_pitch = false;
  bool macro = false;
  std::string eval_split = "all";
  bool anomaly_override = false;
  double threshold = 0.5;
  int jobs = 1;
  std::optional<int> scans_override;
  std::optional<int> epochs_override;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "master RNG seed");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic labeled dataset");
  add_common(gen);
  gen->add_option("--out", out_dir, "dataset directory")->required();
  gen->add_option("--scans", scans_override, "number of scans");
  gen->add_option("--profile", profile_name, "robot profile: wheeled or legged");

  CLI::App* train = app.add_subcommand("train", "Train on a dataset directory");
  add_common(train);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_dir, "output directory for checkpoint and log")->required();
  train->add_option("--loss-mode", loss_mode,
                    "unlabeled handling: none|all-unlabeled|anomalous-only|full");
  train->add_option("--epochs", epochs_override, "override epoch count");
  train->add_flag("--no-flip", no_flip, "disable flip augmentation");
  train->add_flag("--no-yaw", no_yaw, "disable yaw augmentation");
  train->add_flag("--no-pitch", no_pitch, "disable pitch augmentation");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on labeled data");
  eval->add_option("--checkpoint", ck_path, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", out_dir, "output directory for metrics")->required();
  eval->add_option("--split", eval_split,
                   "scans to evaluate: all, train, or val (held-out split of the checkpoint)");
  eval->add_flag("--macro", macro, "also emit macro-averaged metrics");
  eval->add_option("--jobs", jobs, "parallel per-scan evaluation threads");

  CLI::App* map_cmd = app.add_subcommand("map", "Export traversability map and costmap");
  map_cmd->add_option("--checkpoint", ck_path, "checkpoint file")->required();
  map_cmd->add_option("--cloud", cloud_path, "input point cloud (.ply or .gspc)")->required();
  map_cmd->add_option("--out", out_dir, "output directory for map files")->required();
  map_cmd->add_option("--threshold", threshold, "free/occupied score threshold")
      ->capture_default_str();
  map_cmd->add_option("--grid", grid_spec, "mapping extent as WIDTHxHEIGHT:RESOLUTION (meters)");
  map_cmd->add_flag("--anomaly-override", anomaly_override,
                    "force cells outside the hypersphere to score 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      RunConfig cfg = resolve_config(common);
      if (scans_override) cfg.n_scans = *scans_override;
      if (!profile_name.empty()) {
        if (profile_name == "wheeled")
          cfg.profile = travest::wheeled_profile();
        else if (profile_name == "legged")
          cfg.profile = travest::legged_profile();
        else
          throw travest::ConfigError("unknown profile: " + profile_name);
      }
      return cmd_gen(cfg, out_dir);
    }
    if (train->parsed()) {
      RunConfig cfg = resolve_config(common);
      if (!loss_mode.empty()) cfg.train.loss_mode = travest::nn::parse_loss_mode(loss_mode);
      if (epochs_override) cfg.train.epochs = *epochs_override;
      if (no_flip) cfg.train.augment.flip_prob = 0.0;
      if (no_yaw) cfg.train.augment.yaw_min = cfg.train.augment.yaw_max = 0.0;
      if (no_pitch) cfg.train.augment.pitch_enabled = false;
      return cmd_train(std::move(cfg), data_dir, out_dir);
    }
    if (eval->parsed()) return cmd_eval(ck_path, data_dir, out_dir, eval_split, macro, jobs);
    if (map_cmd->parsed())
      return cmd_map(ck_path, cloud_path, out_dir, threshold, grid_spec, anomaly_override);
  } catch (const travest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const travest::SpecError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const travest::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const travest::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
