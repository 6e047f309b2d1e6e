#include "travest/voxelize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <tuple>

#include "travest/errors.hpp"
#include "travest/rng.hpp"

namespace travest {

PillarTensor voxelize(const PointCloud& cloud, const GridConfig& grid, std::uint64_t seed) {
  cloud.check();
  PillarTensor out;
  out.grid = grid;
  const std::size_t cells = static_cast<std::size_t>(grid.cell_count());
  out.counts.assign(cells, 0);
  out.features.assign(cells * static_cast<std::size_t>(grid.max_points) * PillarTensor::kChannels,
                      0.0);

  std::vector<std::vector<int>> assigned(cells);
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const auto& pt = cloud.points[p];
    if (grid.z_crop_enabled() && (pt.z < grid.z_min || pt.z > grid.z_max)) continue;
    const auto cell = cell_of(pt.x, pt.y, grid);
    if (!cell) continue;
    assigned[static_cast<std::size_t>(flat_index(*cell, grid))].push_back(static_cast<int>(p));
  }

  std::vector<int> keep;
  for (std::size_t k = 0; k < cells; ++k) {
    auto& idx = assigned[k];
    if (idx.empty()) continue;

    // Pillar statistics over the full assignment, before any truncation.
    double mx = 0.0, my = 0.0, mz = 0.0;
    for (int p : idx) {
      const auto& pt = cloud.points[static_cast<std::size_t>(p)];
      mx += pt.x;
      my += pt.y;
      mz += pt.z;
    }
    const double n = static_cast<double>(idx.size());
    mx /= n;
    my /= n;
    mz /= n;
    double var_z = 0.0;
    for (int p : idx) {
      const double dz = cloud.points[static_cast<std::size_t>(p)].z - mz;
      var_z += dz * dz;
    }
    const double sigma_z = std::sqrt(var_z / n);

    // Canonical row order makes the output independent of input point
    // order even when the subsample below kicks in.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      const auto& pa = cloud.points[static_cast<std::size_t>(a)];
      const auto& pb = cloud.points[static_cast<std::size_t>(b)];
      return std::tie(pa.z, pa.x, pa.y) < std::tie(pb.z, pb.x, pb.y);
    });

    keep = idx;
    if (static_cast<int>(keep.size()) > grid.max_points) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
      for (int m = 0; m < grid.max_points; ++m) {
        const std::size_t pick =
            static_cast<std::size_t>(m) + rng.uniform_index(keep.size() - static_cast<std::size_t>(m));
        std::swap(keep[static_cast<std::size_t>(m)], keep[pick]);
      }
      keep.resize(static_cast<std::size_t>(grid.max_points));
    }

    const int i = static_cast<int>(k) / grid.width_cells;
    const int j = static_cast<int>(k) % grid.width_cells;
    const double center_x = grid.origin_x + (j + 0.5) * grid.resolution;
    const double center_y = grid.origin_y + (i + 0.5) * grid.resolution;
    out.counts[k] = static_cast<int>(keep.size());
    for (std::size_t m = 0; m < keep.size(); ++m) {
      const auto& pt = cloud.points[static_cast<std::size_t>(keep[m])];
      double* row = out.features.data() + out.row_offset(i, j, static_cast<int>(m));
      row[0] = pt.x - center_x;
      row[1] = pt.y - center_y;
      row[2] = pt.z;
      row[3] = pt.x - mx;
      row[4] = pt.y - my;
      row[5] = pt.z - mz;
      row[6] = sigma_z;
    }
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_pillars(const PillarTensor& tensor, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_pillars: cannot open " + path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::int32_t>(tensor.grid.height_cells));
  write_pod(os, static_cast<std::int32_t>(tensor.grid.width_cells));
  write_pod(os, static_cast<std::int32_t>(tensor.grid.max_points));
  write_pod(os, tensor.grid.resolution);
  write_pod(os, tensor.grid.origin_x);
  write_pod(os, tensor.grid.origin_y);
  write_pod(os, tensor.grid.z_min);
  write_pod(os, tensor.grid.z_max);
  os.write(reinterpret_cast<const char*>(tensor.counts.data()),
           static_cast<std::streamsize>(tensor.counts.size() * sizeof(int)));
  os.write(reinterpret_cast<const char*>(tensor.features.data()),
           static_cast<std::streamsize>(tensor.features.size() * sizeof(double)));
  if (!os) throw IoError("save_pillars: write failed for " + path);
}

PillarTensor load_pillars(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_pillars: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("load_pillars: bad magic in " + path);
  std::uint32_t version = 0;
  read_pod(is, version);
  if (version != kVersion) throw IoError("load_pillars: unsupported version in " + path);
  PillarTensor out;
  std::int32_t h = 0, w = 0, m = 0;
  read_pod(is, h);
  read_pod(is, w);
  read_pod(is, m);
  out.grid.height_cells = h;
  out.grid.width_cells = w;
  out.grid.max_points = m;
  read_pod(is, out.grid.resolution);
  read_pod(is, out.grid.origin_x);
  read_pod(is, out.grid.origin_y);
  read_pod(is, out.grid.z_min);
  read_pod(is, out.grid.z_max);
  if (h < 1 || w < 1 || m < 1) throw IoError("load_pillars: corrupt header in " + path);
  out.counts.resize(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  out.features.resize(out.counts.size() * static_cast<std::size_t>(m) * PillarTensor::kChannels);
  is.read(reinterpret_cast<char*>(out.counts.data()),
          static_cast<std::streamsize>(out.counts.size() * sizeof(int)));
  is.read(reinterpret_cast<char*>(out.features.data()),
          static_cast<std::streamsize>(out.features.size() * sizeof(double)));
  if (!is) throw IoError("load_pillars: truncated file " + path);
  return out;
}

}  // namespace travest
