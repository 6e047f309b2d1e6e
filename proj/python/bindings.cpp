#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>

#include "travest/hypersphere.hpp"
#include "travest/mapper.hpp"
#include "travest/ransac.hpp"
#include "travest/supervision.hpp"
#include "travest/synth_world.hpp"
#include "travest/voxelize.hpp"

namespace py = pybind11;

namespace {

travest::PointCloud cloud_from_array(const py::array_t<double>& points) {
  const auto buf = points.unchecked<2>();
  if (points.shape(1) != 3) throw std::invalid_argument("points must have shape (N, 3)");
  travest::PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i)
    cloud.points.push_back({buf(i, 0), buf(i, 1), buf(i, 2)});
  return cloud;
}

travest::GridConfig grid_from_kwargs(int height_cells, int width_cells, double resolution,
                                     double origin_x, double origin_y, int max_points) {
  travest::GridConfig g;
  g.height_cells = height_cells;
  g.width_cells = width_cells;
  g.resolution = resolution;
  g.origin_x = origin_x;
  g.origin_y = origin_y;
  g.max_points = max_points;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core operations of the self-supervised traversability pipeline";

  m.def("mix_seed", &travest::mix_seed, py::arg("seed"), py::arg("salt"),
        "Derive an independent sub-seed from (seed, salt).");

  m.def(
      "traversability_score",
      [](double vx, double vy, double vcx, double vcy, double eta, double v_th) {
        travest::ScoreParams p;
        p.eta = eta;
        p.v_th = v_th;
        return travest::traversability_score(vx, vy, vcx, vcy, p);
      },
      py::arg("vx"), py::arg("vy"), py::arg("vcx"), py::arg("vcy"), py::arg("eta") = 2.0,
      py::arg("v_th") = 0.25,
      "Sigmoid-squashed velocity-tracking score in [0, 1].");

  m.def(
      "ransac_ground",
      [](const py::array_t<double>& points, int iterations, double inlier_dist,
         double min_inlier_frac, std::uint64_t seed) {
        travest::RansacConfig cfg;
        cfg.iterations = iterations;
        cfg.inlier_dist = inlier_dist;
        cfg.min_inlier_frac = min_inlier_frac;
        cfg.seed = seed;
        const travest::RansacResult r = travest::ransac_ground(cloud_from_array(points), cfg);
        py::dict out;
        out["normal"] = py::make_tuple(r.plane.normal.x(), r.plane.normal.y(), r.plane.normal.z());
        out["offset"] = r.plane.offset;
        out["inlier_frac"] = r.inlier_frac;
        return out;
      },
      py::arg("points"), py::arg("iterations") = 100, py::arg("inlier_dist") = 0.05,
      py::arg("min_inlier_frac") = 0.6, py::arg("seed") = 0,
      "Robust ground-plane fit; returns normal, offset, and inlier fraction.");

  m.def(
      "voxelize",
      [](const py::array_t<double>& points, int height_cells, int width_cells, double resolution,
         double origin_x, double origin_y, int max_points, std::uint64_t seed) {
        const travest::GridConfig grid = grid_from_kwargs(height_cells, width_cells, resolution,
                                                          origin_x, origin_y, max_points);
        const travest::PillarTensor t = travest::voxelize(cloud_from_array(points), grid, seed);
        py::array_t<double> feats({height_cells, width_cells, max_points,
                                   static_cast<int>(travest::PillarTensor::kChannels)});
        std::memcpy(feats.mutable_data(), t.features.data(), t.features.size() * sizeof(double));
        py::array_t<int> counts({height_cells, width_cells});
        std::memcpy(counts.mutable_data(), t.counts.data(), t.counts.size() * sizeof(int));
        return py::make_tuple(feats, counts);
      },
      py::arg("points"), py::arg("height_cells") = 80, py::arg("width_cells") = 80,
      py::arg("resolution") = 0.15, py::arg("origin_x") = -6.0, py::arg("origin_y") = -6.0,
      py::arg("max_points") = 32, py::arg("seed") = 0,
      "BEV pillar features [H, W, M, 7] plus per-cell point counts.");

  m.def(
      "update_radius",
      [](double r_prev, const std::vector<double>& distances, double epsilon) {
        return travest::update_radius(r_prev, distances, epsilon);
      },
      py::arg("r_prev"), py::arg("distances"), py::arg("epsilon") = 0.5,
      "EMA radius update from positive center distances.");

  m.def(
      "generate_scan",
      [](std::uint64_t seed, const std::string& profile_name, int traj_samples) {
        travest::WorldSpec spec;
        spec.seed = seed;
        const travest::RobotProfile profile = profile_name == "legged"
                                                  ? travest::legged_profile()
                                                  : travest::wheeled_profile();
        const travest::World world = travest::generate_world(spec);
        const auto traj =
            travest::generate_trajectory(world, profile, traj_samples, travest::mix_seed(seed, 1));

        const py::ssize_t n = static_cast<py::ssize_t>(world.cloud.size());
        py::array_t<double> pts({n, static_cast<py::ssize_t>(3)});
        py::array_t<int> labels(std::vector<py::ssize_t>{n});
        auto p = pts.mutable_unchecked<2>();
        auto l = labels.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < n; ++i) {
          p(i, 0) = world.cloud.points[static_cast<std::size_t>(i)].x;
          p(i, 1) = world.cloud.points[static_cast<std::size_t>(i)].y;
          p(i, 2) = world.cloud.points[static_cast<std::size_t>(i)].z;
          l(i) = world.cloud.labels[static_cast<std::size_t>(i)];
        }
        const py::ssize_t m = static_cast<py::ssize_t>(traj.size());
        py::array_t<double> tr({m, static_cast<py::ssize_t>(7)});
        auto tv = tr.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < m; ++i) {
          const auto& s = traj[static_cast<std::size_t>(i)];
          tv(i, 0) = s.time;
          tv(i, 1) = s.x;
          tv(i, 2) = s.y;
          tv(i, 3) = s.vx;
          tv(i, 4) = s.vy;
          tv(i, 5) = s.vcx;
          tv(i, 6) = s.vcy;
        }
        return py::make_tuple(pts, labels, tr);
      },
      py::arg("seed") = 0, py::arg("profile") = "wheeled", py::arg("traj_samples") = 55,
      "Synthetic labeled scan: points (N,3), class labels (N,), trajectory "
      "(T,7) rows of [time, x, y, vx, vy, vcx, vcy].");

  m.def(
      "to_costmap",
      [](const py::array_t<double>& scores, double threshold) {
        const auto buf = scores.unchecked<2>();
        travest::TraversabilityMap map;
        map.grid.height_cells = static_cast<int>(buf.shape(0));
        map.grid.width_cells = static_cast<int>(buf.shape(1));
        map.grid.origin_x = 0.0;
        map.grid.origin_y = 0.0;
        map.scores.resize(static_cast<std::size_t>(buf.size()));
        map.unknown.assign(static_cast<std::size_t>(buf.size()), 0);
        for (py::ssize_t i = 0; i < buf.shape(0); ++i)
          for (py::ssize_t j = 0; j < buf.shape(1); ++j) {
            const std::size_t idx =
                static_cast<std::size_t>(i) * static_cast<std::size_t>(buf.shape(1)) +
                static_cast<std::size_t>(j);
            const double v = buf(i, j);
            if (v < 0.0) {
              map.unknown[idx] = 1;
              map.scores[idx] = 0.0;
            } else {
              map.scores[idx] = v;
            }
          }
        const travest::Costmap cm = travest::to_costmap(map, threshold);
        py::array_t<std::uint8_t> out({buf.shape(0), buf.shape(1)});
        std::memcpy(out.mutable_data(), cm.cells.data(), cm.cells.size());
        return out;
      },
      py::arg("scores"), py::arg("threshold") = 0.5,
      "Binarize a score grid: 0=free, 1=occupied, 2=unknown (score < 0).");
}
