#include "pccd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pccd {

namespace {

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

PointCloud read_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point cloud file: " + path);

  PointCloud cloud;
  std::string line;
  int labeled = -1;  // -1 undecided, 0 no labels, 1 labels
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed point line");
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": non-finite coordinate");
    }
    int label;
    const bool has_label = static_cast<bool>(ss >> label);
    if (labeled == -1) {
      labeled = has_label ? 1 : 0;
    } else if (labeled != (has_label ? 1 : 0)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": label column must be present on all lines or none");
    }
    if (has_label && label != 0 && label != 1) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    cloud.points.emplace_back(x, y, z);
    if (has_label) cloud.labels.push_back(static_cast<ChangeLabel>(label));
  }
  return cloud;
}

void write_cloud(const std::string& path, const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 40);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out += format_double(p.x(), "%.9g");
    out += ' ';
    out += format_double(p.y(), "%.9g");
    out += ' ';
    out += format_double(p.z(), "%.9g");
    if (cloud.has_labels()) {
      out += ' ';
      out += std::to_string(static_cast<int>(cloud.labels[i]));
    }
    out += '\n';
  }
  atomic_write(path, out);
}

void write_change_map(const std::string& path, const PointCloud& cloud, const ChangeMap& map) {
  if (cloud.size() != map.size() || map.magnitude.size() != map.decision.size()) {
    throw std::invalid_argument("write_change_map: cloud/map size mismatch");
  }
  std::string out;
  out.reserve(cloud.size() * 48);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out += format_double(p.x(), "%.9g");
    out += ' ';
    out += format_double(p.y(), "%.9g");
    out += ' ';
    out += format_double(p.z(), "%.9g");
    out += ' ';
    out += format_double(map.magnitude[i], "%.6g");
    out += ' ';
    out += std::to_string(static_cast<int>(map.decision[i]));
    out += '\n';
  }
  atomic_write(path, out);
}

LoadedChangeMap read_change_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open change map file: " + path);

  LoadedChangeMap result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream ss(line);
    double x, y, z, mag;
    int decision;
    if (!(ss >> x >> y >> z >> mag >> decision) || (decision != 0 && decision != 1)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed change map line");
    }
    result.cloud.points.emplace_back(x, y, z);
    result.map.magnitude.push_back(mag);
    result.map.decision.push_back(static_cast<ChangeLabel>(decision));
  }
  return result;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot rename " + tmp + " -> " + path);
  }
}

}  // namespace pccd
