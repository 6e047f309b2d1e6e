#include "travest/pointcloud_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "travest/errors.hpp"

namespace travest {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

PointCloud load_ply(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_ply: cannot open " + path);

  std::string line;
  if (!std::getline(is, line) || line != "ply") throw IoError("load_ply: not a PLY file: " + path);

  std::size_t count = 0;
  std::vector<std::string> properties;
  bool in_vertex = false;
  bool ascii = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = (fmt == "ascii");
    } else if (tok == "element") {
      std::string name;
      ls >> name >> count;
      in_vertex = (name == "vertex");
      if (!in_vertex && count > 0) throw IoError("load_ply: unsupported element in " + path);
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      properties.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else if (tok == "comment" || tok == "obj_info" || tok.empty()) {
      continue;
    }
  }
  if (!ascii) throw IoError("load_ply: only ascii PLY is supported: " + path);

  int ix = -1, iy = -1, iz = -1, il = -1;
  for (std::size_t k = 0; k < properties.size(); ++k) {
    if (properties[k] == "x") ix = static_cast<int>(k);
    else if (properties[k] == "y") iy = static_cast<int>(k);
    else if (properties[k] == "z") iz = static_cast<int>(k);
    else if (properties[k] == "label") il = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError("load_ply: missing x/y/z properties in " + path);

  PointCloud cloud;
  cloud.points.reserve(count);
  if (il >= 0) cloud.labels.reserve(count);
  std::vector<double> vals(properties.size());
  for (std::size_t n = 0; n < count; ++n) {
    if (!std::getline(is, line)) throw IoError("load_ply: truncated vertex list in " + path);
    std::istringstream ls(line);
    for (auto& v : vals) {
      if (!(ls >> v)) throw IoError("load_ply: malformed vertex line in " + path);
    }
    cloud.points.push_back({vals[static_cast<std::size_t>(ix)], vals[static_cast<std::size_t>(iy)],
                            vals[static_cast<std::size_t>(iz)]});
    if (il >= 0) cloud.labels.push_back(static_cast<int>(vals[static_cast<std::size_t>(il)]));
  }
  cloud.check();
  return cloud;
}

void save_ply(const PointCloud& cloud, const std::string& path) {
  cloud.check();
  std::ofstream os(path);
  if (!os) throw IoError("save_ply: cannot open " + path);
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_labels()) os << "property int label\n";
  os << "end_header\n";
  os.precision(9);
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    const auto& p = cloud.points[n];
    os << p.x << ' ' << p.y << ' ' << p.z;
    if (cloud.has_labels()) os << ' ' << cloud.labels[n];
    os << '\n';
  }
  if (!os) throw IoError("save_ply: write failed for " + path);
}

namespace {

constexpr char kMagic[4] = {'G', 'S', 'P', 'C'};
constexpr std::uint32_t kLabelFlag = 1u;

}  // namespace

PointCloud load_gspc(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_gspc: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("load_gspc: bad magic in " + path);
  std::uint32_t count = 0, flags = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  is.read(reinterpret_cast<char*>(&flags), sizeof(flags));
  if (!is) throw IoError("load_gspc: truncated header in " + path);

  PointCloud cloud;
  cloud.points.resize(count);
  std::vector<float> xyz(static_cast<std::size_t>(count) * 3);
  is.read(reinterpret_cast<char*>(xyz.data()),
          static_cast<std::streamsize>(xyz.size() * sizeof(float)));
  if (!is) throw IoError("load_gspc: truncated point data in " + path);
  for (std::uint32_t n = 0; n < count; ++n) {
    cloud.points[n] = {xyz[3 * n], xyz[3 * n + 1], xyz[3 * n + 2]};
  }
  if (flags & kLabelFlag) {
    std::vector<std::uint16_t> labels(count);
    is.read(reinterpret_cast<char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * sizeof(std::uint16_t)));
    if (!is) throw IoError("load_gspc: truncated label data in " + path);
    cloud.labels.assign(labels.begin(), labels.end());
  }
  return cloud;
}

void save_gspc(const PointCloud& cloud, const std::string& path) {
  cloud.check();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_gspc: cannot open " + path);
  os.write(kMagic, 4);
  const auto count = static_cast<std::uint32_t>(cloud.size());
  const std::uint32_t flags = cloud.has_labels() ? kLabelFlag : 0u;
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  os.write(reinterpret_cast<const char*>(&flags), sizeof(flags));
  std::vector<float> xyz;
  xyz.reserve(cloud.size() * 3);
  for (const auto& p : cloud.points) {
    xyz.push_back(static_cast<float>(p.x));
    xyz.push_back(static_cast<float>(p.y));
    xyz.push_back(static_cast<float>(p.z));
  }
  os.write(reinterpret_cast<const char*>(xyz.data()),
           static_cast<std::streamsize>(xyz.size() * sizeof(float)));
  if (cloud.has_labels()) {
    std::vector<std::uint16_t> labels;
    labels.reserve(cloud.size());
    for (int l : cloud.labels) {
      if (l < 0 || l > std::numeric_limits<std::uint16_t>::max())
        throw IoError("save_gspc: label out of u16 range");
      labels.push_back(static_cast<std::uint16_t>(l));
    }
    os.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size() * sizeof(std::uint16_t)));
  }
  if (!os) throw IoError("save_gspc: write failed for " + path);
}

PointCloud load_cloud(const std::string& path) {
  return ends_with(path, ".ply") ? load_ply(path) : load_gspc(path);
}

void save_cloud(const PointCloud& cloud, const std::string& path) {
  if (ends_with(path, ".ply")) {
    save_ply(cloud, path);
  } else {
    save_gspc(cloud, path);
  }
}

}  // namespace travest
