#include "travest/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "travest/errors.hpp"

namespace travest {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TrajectoryFile load_trajectory(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_trajectory: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("load_trajectory: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  TrajectoryFile out;
  if (line == "time,x,y,vx,vy,vcx,vcy") {
    out.has_velocity = true;
  } else if (line == "time,x,y") {
    out.has_velocity = false;
  } else {
    throw IoError("load_trajectory: unrecognized header in " + path);
  }

  const std::size_t expected = out.has_velocity ? 7 : 3;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != expected)
      throw IoError("load_trajectory: row " + std::to_string(row) + " has " +
                    std::to_string(fields.size()) + " fields in " + path);
    TrajectorySample s;
    try {
      s.time = std::stod(fields[0]);
      s.x = std::stod(fields[1]);
      s.y = std::stod(fields[2]);
      if (out.has_velocity) {
        s.vx = std::stod(fields[3]);
        s.vy = std::stod(fields[4]);
        s.vcx = std::stod(fields[5]);
        s.vcy = std::stod(fields[6]);
      }
    } catch (const std::exception&) {
      throw IoError("load_trajectory: non-numeric field at row " + std::to_string(row) + " in " +
                    path);
    }
    if (!out.samples.empty() && s.time <= out.samples.back().time)
      throw IoError("load_trajectory: times not strictly increasing at row " + std::to_string(row) +
                    " in " + path);
    out.samples.push_back(s);
  }
  return out;
}

void save_trajectory(const TrajectoryFile& traj, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("save_trajectory: cannot open " + path);
  os << (traj.has_velocity ? "time,x,y,vx,vy,vcx,vcy" : "time,x,y") << '\n';
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
    os << buf;
  };
  for (const auto& s : traj.samples) {
    put(s.time, ',');
    put(s.x, ',');
    put(s.y, traj.has_velocity ? ',' : '\n');
    if (traj.has_velocity) {
      put(s.vx, ',');
      put(s.vy, ',');
      put(s.vcx, ',');
      put(s.vcy, '\n');
    }
  }
  if (!os) throw IoError("save_trajectory: write failed for " + path);
}

}  // namespace travest
