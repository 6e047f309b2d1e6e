#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "travest/geometry.hpp"
#include "travest/nn/tensor.hpp"
#include "travest/rng.hpp"

namespace test_util {

// Fresh scratch directory under the system temp root, cleaned on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("travest_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline travest::PointCloud random_cloud(int n, double extent, travest::Rng& rng,
                                        double z_lo = -1.0, double z_hi = 1.0) {
  travest::PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    cloud.points.push_back({rng.uniform(-extent / 2, extent / 2),
                            rng.uniform(-extent / 2, extent / 2), rng.uniform(z_lo, z_hi)});
  return cloud;
}

inline double sq_dist(const travest::Point3& a, const travest::Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Central finite differences on a scalar graph output. `build` must
// construct the full graph from scratch (so perturbed parameter values
// propagate) and return the scalar loss node. Returns the worst
// elementwise relative error max(|a-n| / max(|n|, floor)).
inline double check_gradients(
    const std::vector<travest::nn::NodePtr<double>>& params,
    const std::function<travest::nn::NodePtr<double>()>& build, double h = 1e-6,
    double floor_v = 1e-3) {
  auto loss = build();
  travest::nn::backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double orig = p->value[k];
      p->value[k] = orig + h;
      const double up = build()->value[0];
      p->value[k] = orig - h;
      const double down = build()->value[0];
      p->value[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].empty() ? 0.0 : analytic[pi][k];
      const double denom = std::max(std::abs(numeric), floor_v);
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace test_util
