#include "travest/run_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "travest/errors.hpp"

namespace travest {
namespace {

using nlohmann::json;

// Tracks which keys of one JSON object were consumed so leftovers can be
// reported by name.
class StrictObject {
 public:
  StrictObject(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ConfigError("config section '" + section_ + "' must be an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + section_ + "." + key + "': " + e.what());
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown config key '" + section_ + "." + item.key() + "'");
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

nn::LossWeights weights_from_json(const json& j, const std::string& section) {
  nn::LossWeights w;
  StrictObject o(j, section);
  o.get("lambda1", w.lambda1);
  o.get("lambda2", w.lambda2);
  o.get("lambda3", w.lambda3);
  o.get("zeta", w.zeta);
  o.finish();
  return w;
}

nn::NetworkConfig net_from_json(const json& j, const std::string& section) {
  nn::NetworkConfig n;
  StrictObject o(j, section);
  o.get("point_feat_dim", n.point_feat_dim);
  o.get("cell_feat_dim", n.cell_feat_dim);
  o.get("latent_dim", n.latent_dim);
  o.get("encoder_hidden", n.encoder_hidden);
  o.get("recon_hidden", n.recon_hidden);
  o.get("dropout_rate", n.dropout_rate);
  o.get("backbone_convs", n.backbone_convs);
  o.finish();
  return n;
}

RansacConfig ransac_from_json(const json& j, const std::string& section) {
  RansacConfig r;
  StrictObject o(j, section);
  o.get("iterations", r.iterations);
  o.get("inlier_dist", r.inlier_dist);
  o.get("min_inlier_frac", r.min_inlier_frac);
  o.get("seed", r.seed);
  o.finish();
  return r;
}

json to_json(const nn::LossWeights& w) {
  return json{{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3},
              {"zeta", w.zeta}};
}

json to_json(const nn::NetworkConfig& n) {
  return json{{"point_feat_dim", n.point_feat_dim}, {"cell_feat_dim", n.cell_feat_dim},
              {"latent_dim", n.latent_dim},         {"encoder_hidden", n.encoder_hidden},
              {"recon_hidden", n.recon_hidden},     {"dropout_rate", n.dropout_rate},
              {"backbone_convs", n.backbone_convs}};
}

json to_json(const RansacConfig& r) {
  return json{{"iterations", r.iterations},
              {"inlier_dist", r.inlier_dist},
              {"min_inlier_frac", r.min_inlier_frac},
              {"seed", r.seed}};
}

}  // namespace

GridConfig grid_from_json(const json& j, const std::string& section) {
  GridConfig g;
  StrictObject o(j, section);
  o.get("height_cells", g.height_cells);
  o.get("width_cells", g.width_cells);
  o.get("resolution", g.resolution);
  o.get("origin_x", g.origin_x);
  o.get("origin_y", g.origin_y);
  o.get("max_points", g.max_points);
  o.get("z_min", g.z_min);
  o.get("z_max", g.z_max);
  o.finish();
  return g;
}

ScoreParams score_from_json(const json& j, const std::string& section) {
  ScoreParams s;
  StrictObject o(j, section);
  o.get("eta", s.eta);
  o.get("v_th", s.v_th);
  if (o.has("constant_tau")) {
    const json& v = o.at("constant_tau");
    if (v.is_null())
      s.constant_tau.reset();
    else
      s.constant_tau = v.get<double>();
  }
  o.finish();
  return s;
}

RobotProfile profile_from_json(const json& j, const std::string& section) {
  RobotProfile p;
  StrictObject o(j, section);
  if (o.has("name")) {
    const std::string name = o.at("name").get<std::string>();
    if (name == "wheeled")
      p = wheeled_profile();
    else if (name == "legged")
      p = legged_profile();
    else
      throw ConfigError("config key '" + section + ".name': unknown profile '" + name + "'");
  }
  o.get("traversable_classes", p.traversable_classes);
  if (o.has("tracking_sigma")) {
    p.tracking_sigma.clear();
    for (const auto& item : o.at("tracking_sigma").items()) {
      try {
        p.tracking_sigma[std::stoi(item.key())] = item.value().get<double>();
      } catch (const std::exception&) {
        throw ConfigError("config key '" + section + ".tracking_sigma': class ids must be integer strings");
      }
    }
  }
  o.get("nominal_speed", p.nominal_speed);
  o.finish();
  return p;
}

WorldSpec world_from_json(const json& j, const std::string& section) {
  WorldSpec w;
  StrictObject o(j, section);
  o.get("extent", w.extent);
  o.get("ground_noise", w.ground_noise);
  o.get("density", w.density);
  o.get("base_slope_min_deg", w.base_slope_min_deg);
  o.get("base_slope_max_deg", w.base_slope_max_deg);
  o.get("slope_dir_deg", w.slope_dir_deg);
  o.get("slope_dir_spread_deg", w.slope_dir_spread_deg);
  o.get("mounds_min", w.mounds_min);
  o.get("mounds_max", w.mounds_max);
  o.get("mound_amp_min", w.mound_amp_min);
  o.get("mound_amp_max", w.mound_amp_max);
  o.get("mound_sigma_min", w.mound_sigma_min);
  o.get("mound_sigma_max", w.mound_sigma_max);
  o.get("rock_clusters", w.rock_clusters);
  o.get("low_bushes", w.low_bushes);
  o.get("high_bushes", w.high_bushes);
  o.get("trees", w.trees);
  o.get("obstacle_density", w.obstacle_density);
  o.get("corridor_half_width", w.corridor_half_width);
  o.get("corridor_half_length", w.corridor_half_length);
  o.get("seed", w.seed);
  o.finish();
  return w;
}

AugmentPolicy augment_from_json(const json& j, const std::string& section) {
  AugmentPolicy a;
  StrictObject o(j, section);
  o.get("flip_prob", a.flip_prob);
  o.get("yaw_min", a.yaw_min);
  o.get("yaw_max", a.yaw_max);
  o.get("pitch_enabled", a.pitch_enabled);
  o.get("pitch_slope_gate", a.pitch_slope_gate);
  if (o.has("ransac")) a.ransac = ransac_from_json(o.at("ransac"), section + ".ransac");
  o.finish();
  return a;
}

TrainConfig train_from_json(const json& j, const std::string& section) {
  TrainConfig t;
  StrictObject o(j, section);
  o.get("lr", t.lr);
  o.get("batch_size", t.batch_size);
  o.get("epochs", t.epochs);
  o.get("k", t.k);
  o.get("epsilon", t.epsilon);
  if (o.has("loss_mode")) t.loss_mode = nn::parse_loss_mode(o.at("loss_mode").get<std::string>());
  if (o.has("weights")) t.weights = weights_from_json(o.at("weights"), section + ".weights");
  if (o.has("augment")) t.augment = augment_from_json(o.at("augment"), section + ".augment");
  o.get("seed", t.seed);
  o.get("train_frac", t.train_frac);
  o.get("val_frac", t.val_frac);
  if (o.has("net")) t.net = net_from_json(o.at("net"), section + ".net");
  o.finish();
  return t;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  StrictObject o(j, "config");
  o.get("seed", cfg.seed);
  if (o.has("grid")) cfg.grid = grid_from_json(o.at("grid"), "grid");
  if (o.has("score")) cfg.score = score_from_json(o.at("score"), "score");
  if (o.has("train")) cfg.train = train_from_json(o.at("train"), "train");
  if (o.has("world")) cfg.world = world_from_json(o.at("world"), "world");
  if (o.has("profile")) cfg.profile = profile_from_json(o.at("profile"), "profile");
  o.get("n_scans", cfg.n_scans);
  o.get("traj_samples", cfg.traj_samples);
  if (o.has("paths")) {
    StrictObject p(o.at("paths"), "paths");
    p.get("data_dir", cfg.paths.data_dir);
    p.get("out_dir", cfg.paths.out_dir);
    p.get("checkpoint", cfg.paths.checkpoint);
    p.get("cloud", cfg.paths.cloud);
    p.finish();
  }
  o.finish();
  if (cfg.n_scans < 2) throw ConfigError("config key 'n_scans': need at least 2 scans");
  if (cfg.traj_samples < 2) throw ConfigError("config key 'traj_samples': need at least 2 samples");
  cfg.score.check();
  cfg.train.check();
  cfg.world.check();
  cfg.profile.check();
  return cfg;
}

json to_json(const GridConfig& g) {
  return json{{"height_cells", g.height_cells},
              {"width_cells", g.width_cells},
              {"resolution", g.resolution},
              {"origin_x", g.origin_x},
              {"origin_y", g.origin_y},
              {"max_points", g.max_points},
              {"z_min", g.z_min},
              {"z_max", g.z_max}};
}

json to_json(const ScoreParams& s) {
  json j{{"eta", s.eta}, {"v_th", s.v_th}};
  j["constant_tau"] = s.constant_tau ? json(*s.constant_tau) : json(nullptr);
  return j;
}

json to_json(const RobotProfile& p) {
  json sig = json::object();
  for (const auto& [cls, sigma] : p.tracking_sigma) sig[std::to_string(cls)] = sigma;
  return json{{"name", p.name},
              {"traversable_classes", p.traversable_classes},
              {"nominal_speed", p.nominal_speed},
              {"tracking_sigma", sig}};
}

json to_json(const WorldSpec& w) {
  return json{{"extent", w.extent},
              {"ground_noise", w.ground_noise},
              {"density", w.density},
              {"base_slope_min_deg", w.base_slope_min_deg},
              {"base_slope_max_deg", w.base_slope_max_deg},
              {"slope_dir_deg", w.slope_dir_deg},
              {"slope_dir_spread_deg", w.slope_dir_spread_deg},
              {"mounds_min", w.mounds_min},
              {"mounds_max", w.mounds_max},
              {"mound_amp_min", w.mound_amp_min},
              {"mound_amp_max", w.mound_amp_max},
              {"mound_sigma_min", w.mound_sigma_min},
              {"mound_sigma_max", w.mound_sigma_max},
              {"rock_clusters", w.rock_clusters},
              {"low_bushes", w.low_bushes},
              {"high_bushes", w.high_bushes},
              {"trees", w.trees},
              {"obstacle_density", w.obstacle_density},
              {"corridor_half_width", w.corridor_half_width},
              {"corridor_half_length", w.corridor_half_length},
              {"seed", w.seed}};
}

json to_json(const AugmentPolicy& a) {
  return json{{"flip_prob", a.flip_prob},
              {"yaw_min", a.yaw_min},
              {"yaw_max", a.yaw_max},
              {"pitch_enabled", a.pitch_enabled},
              {"pitch_slope_gate", a.pitch_slope_gate},
              {"ransac", to_json(a.ransac)}};
}

json to_json(const TrainConfig& t) {
  return json{{"lr", t.lr},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"k", t.k},
              {"epsilon", t.epsilon},
              {"loss_mode", nn::loss_mode_name(t.loss_mode)},
              {"weights", to_json(t.weights)},
              {"augment", to_json(t.augment)},
              {"seed", t.seed},
              {"train_frac", t.train_frac},
              {"val_frac", t.val_frac},
              {"net", to_json(t.net)}};
}

json to_json(const RunConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"grid", to_json(cfg.grid)},
              {"score", to_json(cfg.score)},
              {"train", to_json(cfg.train)},
              {"world", to_json(cfg.world)},
              {"profile", to_json(cfg.profile)},
              {"n_scans", cfg.n_scans},
              {"traj_samples", cfg.traj_samples},
              {"paths",
               json{{"data_dir", cfg.paths.data_dir},
                    {"out_dir", cfg.paths.out_dir},
                    {"checkpoint", cfg.paths.checkpoint},
                    {"cloud", cfg.paths.cloud}}}};
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << to_json(cfg).dump(2) << "\n";
  if (!out) throw IoError("failed writing config file: " + path);
}

}  // namespace travest
