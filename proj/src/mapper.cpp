#include "travest/mapper.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "travest/errors.hpp"
#include "travest/hypersphere.hpp"

namespace travest {

TraversabilityMap infer_map(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid,
                            bool anomaly_override) {
  TraversabilityMap out;
  out.grid = grid;
  out.scores.assign(static_cast<std::size_t>(grid.cell_count()), 0.0);
  out.unknown.assign(static_cast<std::size_t>(grid.cell_count()), 1);
  if (cloud.empty()) return out;
  const ScanInference inf = infer_scan(model, cloud, grid);
  const int dim = model.sphere.dim();
  for (std::size_t s = 0; s < inf.cell_flat.size(); ++s) {
    const auto k = static_cast<std::size_t>(inf.cell_flat[s]);
    double score = inf.scores[s];
    if (anomaly_override) {
      const double d =
          center_distance(inf.latents.data() + s * static_cast<std::size_t>(dim), model.sphere);
      if (d > model.sphere.radius) score = 0.0;
    }
    out.scores[k] = score;
    out.unknown[k] = 0;
  }
  return out;
}

Costmap to_costmap(const TraversabilityMap& map, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw ConfigError("to_costmap: threshold must lie in [0,1]");
  Costmap out;
  out.grid = map.grid;
  out.cells.assign(map.scores.size(), CostCell::unknown);
  for (std::size_t k = 0; k < map.scores.size(); ++k) {
    if (map.unknown[k]) continue;
    out.cells[k] = map.scores[k] >= threshold ? CostCell::free : CostCell::occupied;
  }
  return out;
}

void save_map_csv(const TraversabilityMap& map, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("save_map_csv: cannot open " + path);
  char buf[64];
  os << "# dims " << map.grid.height_cells << " " << map.grid.width_cells << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", map.grid.resolution);
  os << "# resolution " << buf << "\n";
  os << "# origin ";
  std::snprintf(buf, sizeof(buf), "%.17g ", map.grid.origin_x);
  os << buf;
  std::snprintf(buf, sizeof(buf), "%.17g", map.grid.origin_y);
  os << buf << "\n";
  for (int i = 0; i < map.grid.height_cells; ++i) {
    for (int j = 0; j < map.grid.width_cells; ++j) {
      const double v = map.is_unknown(i, j) ? -1.0 : map.score_at(i, j);
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf << (j + 1 == map.grid.width_cells ? "\n" : ",");
    }
  }
  if (!os) throw IoError("save_map_csv: write failed for " + path);
}

TraversabilityMap load_map_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_map_csv: cannot open " + path);
  TraversabilityMap out;
  std::string line, word;
  int h = 0, w = 0;
  {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string hash, key;
    if (!(ls >> hash >> key >> h >> w) || hash != "#" || key != "dims")
      throw IoError("load_map_csv: bad dims header in " + path);
    std::getline(is, line);
    std::istringstream ls2(line);
    if (!(ls2 >> hash >> key >> out.grid.resolution) || key != "resolution")
      throw IoError("load_map_csv: bad resolution header in " + path);
    std::getline(is, line);
    std::istringstream ls3(line);
    if (!(ls3 >> hash >> key >> out.grid.origin_x >> out.grid.origin_y) || key != "origin")
      throw IoError("load_map_csv: bad origin header in " + path);
  }
  out.grid.height_cells = h;
  out.grid.width_cells = w;
  out.scores.assign(static_cast<std::size_t>(h) * w, 0.0);
  out.unknown.assign(static_cast<std::size_t>(h) * w, 1);
  for (int i = 0; i < h; ++i) {
    if (!std::getline(is, line)) throw IoError("load_map_csv: truncated grid in " + path);
    std::istringstream ls(line);
    for (int j = 0; j < w; ++j) {
      if (!std::getline(ls, word, ',')) throw IoError("load_map_csv: short row in " + path);
      const double v = std::stod(word);
      const auto k = static_cast<std::size_t>(i * w + j);
      if (v < 0.0) continue;
      out.scores[k] = v;
      out.unknown[k] = 0;
    }
  }
  return out;
}

namespace {

constexpr std::uint8_t kFreePixel = 254;
constexpr std::uint8_t kOccupiedPixel = 0;
constexpr std::uint8_t kUnknownPixel = 205;

}  // namespace

void save_costmap_pgm(const Costmap& map, const std::string& pgm_path,
                      const std::string& yaml_path, double threshold) {
  std::ofstream os(pgm_path, std::ios::binary);
  if (!os) throw IoError("save_costmap_pgm: cannot open " + pgm_path);
  os << "P5\n" << map.grid.width_cells << " " << map.grid.height_cells << "\n255\n";
  // Image row 0 is the north edge: write grid rows top-down.
  for (int i = map.grid.height_cells - 1; i >= 0; --i) {
    for (int j = 0; j < map.grid.width_cells; ++j) {
      std::uint8_t px = kUnknownPixel;
      switch (map.at(i, j)) {
        case CostCell::free: px = kFreePixel; break;
        case CostCell::occupied: px = kOccupiedPixel; break;
        case CostCell::unknown: px = kUnknownPixel; break;
      }
      os.write(reinterpret_cast<const char*>(&px), 1);
    }
  }
  if (!os) throw IoError("save_costmap_pgm: write failed for " + pgm_path);

  std::ofstream ys(yaml_path);
  if (!ys) throw IoError("save_costmap_pgm: cannot open " + yaml_path);
  char buf[64];
  const std::size_t slash = pgm_path.find_last_of('/');
  ys << "image: " << (slash == std::string::npos ? pgm_path : pgm_path.substr(slash + 1)) << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", map.grid.resolution);
  ys << "resolution: " << buf << "\n";
  ys << "origin: [";
  std::snprintf(buf, sizeof(buf), "%.17g", map.grid.origin_x);
  ys << buf << ", ";
  std::snprintf(buf, sizeof(buf), "%.17g", map.grid.origin_y);
  ys << buf << ", 0.0]\n";
  ys << "negate: 0\n";
  ys << "occupied_thresh: 0.65\n";
  ys << "free_thresh: 0.196\n";
  std::snprintf(buf, sizeof(buf), "%.17g", threshold);
  ys << "traversability_threshold: " << buf << "\n";
  if (!ys) throw IoError("save_costmap_pgm: write failed for " + yaml_path);
}

Costmap load_costmap_pgm(const std::string& pgm_path) {
  std::ifstream is(pgm_path, std::ios::binary);
  if (!is) throw IoError("load_costmap_pgm: cannot open " + pgm_path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255)
    throw IoError("load_costmap_pgm: unsupported PGM header in " + pgm_path);
  is.get();  // single whitespace after the header
  Costmap out;
  out.grid.height_cells = h;
  out.grid.width_cells = w;
  out.cells.assign(static_cast<std::size_t>(h) * w, CostCell::unknown);
  for (int i = h - 1; i >= 0; --i) {
    for (int j = 0; j < w; ++j) {
      int px = is.get();
      if (px < 0) throw IoError("load_costmap_pgm: truncated pixel data in " + pgm_path);
      CostCell c = CostCell::unknown;
      if (px == kFreePixel) c = CostCell::free;
      else if (px == kOccupiedPixel) c = CostCell::occupied;
      else if (px != kUnknownPixel)
        throw IoError("load_costmap_pgm: unexpected gray level " + std::to_string(px) + " in " +
                      pgm_path);
      out.cells[static_cast<std::size_t>(i * w + j)] = c;
    }
  }
  return out;
}

}  // namespace travest
