#include "travest/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "travest/errors.hpp"
#include "travest/pointcloud_io.hpp"
#include "travest/rng.hpp"
#include "travest/trajectory_io.hpp"

namespace travest {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kManifestVersion = 1;

std::string scan_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scan_%03d", index);
  return buf;
}

}  // namespace

void write_dataset(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.n_scans < 1) throw SpecError("dataset needs at least one scan");
  cfg.profile.check();
  cfg.score.check();

  fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "scans", ec);
  if (ec) throw IoError("cannot create dataset directory: " + (root / "scans").string());

  json scans = json::array();
  for (int s = 0; s < cfg.n_scans; ++s) {
    WorldSpec spec = cfg.world;
    spec.seed = mix_seed(cfg.seed, 0x570000u + static_cast<std::uint64_t>(s));
    const World world = generate_world(spec);
    const auto traj = generate_trajectory(world, cfg.profile, cfg.traj_samples,
                                          mix_seed(cfg.seed, 0x7A0000u + static_cast<std::uint64_t>(s)));

    const std::string stem = scan_stem(s);
    const std::string cloud_rel = "scans/" + stem + ".ply";
    const std::string traj_rel = "scans/" + stem + "_traj.csv";
    save_cloud(world.cloud, (root / cloud_rel).string());
    TrajectoryFile tf;
    tf.samples = traj;
    tf.has_velocity = !cfg.score.constant_tau.has_value();
    save_trajectory(tf, (root / traj_rel).string());
    scans.push_back(json{{"cloud", cloud_rel}, {"trajectory", traj_rel}});
  }

  json manifest{{"format", "gsat-dataset"},
                {"version", kManifestVersion},
                {"seed", cfg.seed},
                {"grid", to_json(cfg.grid)},
                {"score", to_json(cfg.score)},
                {"profile", to_json(cfg.profile)},
                {"world", to_json(cfg.world)},
                {"anomalous_classes", anomalous_classes(cfg.profile)},
                {"scans", scans}};
  const fs::path manifest_path = root / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + manifest_path.string());
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("dataset manifest " + manifest_path.string() + ": " + e.what());
  }

  if (!j.is_object() || j.value("format", "") != "gsat-dataset")
    throw IoError("not a dataset manifest: " + manifest_path.string());
  if (j.value("version", 0) != kManifestVersion)
    throw IoError("unsupported dataset manifest version in " + manifest_path.string());

  Dataset ds;
  ds.grid = grid_from_json(j.at("grid"), "manifest.grid");
  ds.score = score_from_json(j.at("score"), "manifest.score");
  ds.profile = profile_from_json(j.at("profile"), "manifest.profile");
  ds.anomalous = j.at("anomalous_classes").get<std::vector<int>>();

  if (!j.contains("scans") || !j.at("scans").is_array() || j.at("scans").empty())
    throw IoError("dataset manifest lists no scans: " + manifest_path.string());

  for (const auto& entry : j.at("scans")) {
    Sample sample;
    sample.cloud = load_cloud((root / entry.at("cloud").get<std::string>()).string());
    const TrajectoryFile tf =
        load_trajectory((root / entry.at("trajectory").get<std::string>()).string());
    ScoreParams score = ds.score;
    if (!tf.has_velocity && !score.constant_tau) score.constant_tau = 1.0;
    sample.window =
        build_window(tf.samples, 0, static_cast<int>(tf.samples.size()) - 1, score);
    sample.grid_scores = rasterize(sample.window, ds.grid);
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

}  // namespace travest
