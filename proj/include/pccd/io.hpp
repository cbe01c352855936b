#ifndef PCCD_IO_HPP
#define PCCD_IO_HPP

#include "pccd/types.hpp"

#include <string>

namespace pccd {

/// Point-cloud text format: one point per line, whitespace-separated
/// `x y z [label]`, lines starting with `#` ignored, coordinates in meters.
/// The label column must be present on all lines or on none.
PointCloud read_cloud(const std::string& path);
void write_cloud(const std::string& path, const PointCloud& cloud);

/// Change-map text format: one line per point of the newer cloud,
/// `x y z magnitude decision`, magnitude with 6 significant digits.
void write_change_map(const std::string& path, const PointCloud& cloud, const ChangeMap& map);

struct LoadedChangeMap {
  PointCloud cloud;  // coordinates only
  ChangeMap map;
};
LoadedChangeMap read_change_map(const std::string& path);

/// Writes `content` to `path` atomically (write-temp-then-rename).
void atomic_write(const std::string& path, const std::string& content);

}  // namespace pccd

#endif  // PCCD_IO_HPP
