#include "pccd/synth.hpp"

#include "pccd/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pccd {

namespace {

constexpr double kNoiseTruncation = 4.0;  // sigma multiples
constexpr double kVegetationMinZ = 0.05;

double noise_margin(const SceneConfig& cfg) { return kNoiseTruncation * cfg.noise_sigma; }

/// Gaussian component truncated to +/- 4 sigma.
double truncated_normal(Rng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  for (int tries = 0; tries < 100; ++tries) {
    const double v = rng.normal() * sigma;
    if (std::abs(v) <= kNoiseTruncation * sigma) return v;
  }
  return 0.0;
}

Point3 noisy(Rng& rng, double x, double y, double z, double sigma) {
  return {x + truncated_normal(rng, sigma), y + truncated_normal(rng, sigma),
          z + truncated_normal(rng, sigma)};
}

int sample_count(double density, double area) {
  return static_cast<int>(std::llround(density * area));
}

struct XyRegion {
  // Circle when radius > 0, else rectangle.
  Footprint rect;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;

  bool contains(double x, double y) const {
    if (radius > 0.0) return (Eigen::Vector2d(x, y) - center).squaredNorm() <= radius * radius;
    return rect.contains_xy(x, y);
  }
};

bool rects_overlap(const Footprint& a, const Footprint& b) {
  return a.x0 <= b.x1 && b.x0 <= a.x1 && a.y0 <= b.y1 && b.y0 <= a.y1;
}

bool rect_circle_overlap(const Footprint& r, const Eigen::Vector2d& c, double rad) {
  const double dx = std::max({r.x0 - c.x(), 0.0, c.x() - r.x1});
  const double dy = std::max({r.y0 - c.y(), 0.0, c.y() - r.y1});
  return dx * dx + dy * dy <= rad * rad;
}

bool regions_overlap(const XyRegion& a, const XyRegion& b) {
  if (a.radius > 0.0 && b.radius > 0.0) {
    const double r = a.radius + b.radius;
    return (a.center - b.center).squaredNorm() <= r * r;
  }
  if (a.radius > 0.0) return rect_circle_overlap(b.rect, a.center, a.radius);
  if (b.radius > 0.0) return rect_circle_overlap(a.rect, b.center, b.radius);
  return rects_overlap(a.rect, b.rect);
}

std::vector<XyRegion> op_xy_regions(const SceneConfig& cfg) {
  const double m = noise_margin(cfg);
  std::vector<XyRegion> regions;
  for (const auto& b : cfg.new_buildings) regions.push_back({b.footprint.inflated(m), {}, 0.0});
  for (const auto& d : cfg.demolished_buildings)
    regions.push_back({d.footprint.inflated(m), {}, 0.0});
  for (const auto& v : cfg.vegetation) regions.push_back({{}, v.center, v.radius});
  for (const auto& c : cfg.clutter)
    regions.push_back({Footprint{c.center.x() - c.half_x, c.center.y() - c.half_y,
                                 c.center.x() + c.half_x, c.center.y() + c.half_y}
                           .inflated(m),
                       {},
                       0.0});
  return regions;
}

void validate(const SceneConfig& cfg) {
  if (!(cfg.extent > 0)) throw std::invalid_argument("scene: extent must be > 0");
  if (!(cfg.density_t1 > 0) || !(cfg.density_t2 > 0)) {
    throw std::invalid_argument("scene: densities must be > 0");
  }
  if (cfg.noise_sigma < 0) throw std::invalid_argument("scene: noise_sigma must be >= 0");
  if (cfg.wall_density_factor < 0) {
    throw std::invalid_argument("scene: wall_density_factor must be >= 0");
  }

  auto check_rect = [&](const Footprint& f, const char* what) {
    if (!(f.x0 < f.x1 && f.y0 < f.y1)) {
      throw std::invalid_argument(std::string("scene: degenerate footprint for ") + what);
    }
    if (f.x0 < 0 || f.y0 < 0 || f.x1 > cfg.extent || f.y1 > cfg.extent) {
      throw std::invalid_argument(std::string("scene: footprint outside extent for ") + what);
    }
  };
  for (const auto& b : cfg.new_buildings) {
    check_rect(b.footprint, "new_building");
    if (!(b.height > 0)) throw std::invalid_argument("scene: building height must be > 0");
  }
  for (const auto& d : cfg.demolished_buildings) {
    check_rect(d.footprint, "demolish_building");
    if (!(d.height > 0)) throw std::invalid_argument("scene: building height must be > 0");
  }
  for (const auto& v : cfg.vegetation) {
    if (!(v.radius > 0) || !(v.height > 0)) {
      throw std::invalid_argument("scene: vegetation radius/height must be > 0");
    }
    if (v.center.x() - v.radius < 0 || v.center.y() - v.radius < 0 ||
        v.center.x() + v.radius > cfg.extent || v.center.y() + v.radius > cfg.extent) {
      throw std::invalid_argument("scene: vegetation outside extent");
    }
  }
  for (const auto& c : cfg.clutter) {
    if (!(c.half_x > 0) || !(c.half_y > 0) || !(c.height > 0)) {
      throw std::invalid_argument("scene: clutter dimensions must be > 0");
    }
    check_rect(Footprint{c.center.x() - c.half_x, c.center.y() - c.half_y,
                         c.center.x() + c.half_x, c.center.y() + c.half_y},
               "clutter");
  }

  const auto regions = op_xy_regions(cfg);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      if (regions_overlap(regions[i], regions[j])) {
        throw std::invalid_argument("scene: change ops overlap");
      }
    }
  }
}

/// Roof and four walls of a flat-roofed box, sampled at `density` points/m^2
/// (walls at `density * wall_factor`) with truncated noise.
void sample_building(Rng& rng, const Footprint& f, double height, double density,
                     double wall_factor, double sigma, PointCloud& cloud, ChangeLabel label,
                     bool labeled) {
  auto emit = [&](const Point3& p) {
    cloud.points.push_back(p);
    if (labeled) cloud.labels.push_back(label);
  };

  const int roof_n = sample_count(density, f.area());
  for (int i = 0; i < roof_n; ++i) {
    const double x = rng.uniform(f.x0, f.x1);
    const double y = rng.uniform(f.y0, f.y1);
    emit(noisy(rng, x, y, height, sigma));
  }

  struct Wall {
    Point3 origin;
    Eigen::Vector3d along;
    double length;
  };
  const Wall walls[4] = {
      {{f.x0, f.y0, 0}, {1, 0, 0}, f.x1 - f.x0},
      {{f.x0, f.y1, 0}, {1, 0, 0}, f.x1 - f.x0},
      {{f.x0, f.y0, 0}, {0, 1, 0}, f.y1 - f.y0},
      {{f.x1, f.y0, 0}, {0, 1, 0}, f.y1 - f.y0},
  };
  for (const Wall& w : walls) {
    const int n = sample_count(density * wall_factor, w.length * height);
    for (int i = 0; i < n; ++i) {
      const Point3 base = w.origin + rng.uniform(0.0, w.length) * w.along;
      const double z = rng.uniform(0.0, height);
      emit(noisy(rng, base.x(), base.y(), z, sigma));
    }
  }
}

void sample_ground(Rng& rng, const SceneConfig& cfg, double density,
                   const std::vector<XyRegion>& carve,
                   const std::vector<Footprint>& mark_changed, PointCloud& cloud, bool labeled) {
  const int n = sample_count(density, cfg.extent * cfg.extent);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, cfg.extent);
    const double y = rng.uniform(0.0, cfg.extent);
    const Point3 p = noisy(rng, x, y, 0.0, cfg.noise_sigma);
    bool carved = false;
    for (const XyRegion& r : carve) {
      if (r.contains(p.x(), p.y())) {
        carved = true;
        break;
      }
    }
    if (carved) continue;
    cloud.points.push_back(p);
    if (labeled) {
      ChangeLabel label = kUnchanged;
      for (const Footprint& f : mark_changed) {
        if (f.contains_xy(p.x(), p.y())) {
          label = kChanged;
          break;
        }
      }
      cloud.labels.push_back(label);
    }
  }
}

void sample_vegetation(Rng& rng, const VegetationOp& v, double density, PointCloud& cloud) {
  const int n = sample_count(density, M_PI * v.radius * v.radius);
  for (int i = 0; i < n; ++i) {
    double x = v.center.x(), y = v.center.y(), z = v.height / 2;
    for (int tries = 0; tries < 200; ++tries) {
      x = v.center.x() + rng.normal() * (v.radius / 2);
      y = v.center.y() + rng.normal() * (v.radius / 2);
      z = v.height / 2 + rng.normal() * (v.height / 4);
      const bool in_disk = (Eigen::Vector2d(x, y) - v.center).norm() <= v.radius;
      if (in_disk && z >= kVegetationMinZ && z <= v.height) break;
      x = v.center.x();
      y = v.center.y();
      z = v.height / 2;
    }
    cloud.points.emplace_back(x, y, z);
    cloud.labels.push_back(kChanged);
  }
}

}  // namespace

bool ChangeRegion::contains(const Point3& p) const {
  if (p.z() < z_lo || p.z() > z_hi) return false;
  if (kind == Kind::Vegetation) return (p.head<2>() - center).norm() <= radius;
  return footprint.contains_xy(p.x(), p.y());
}

std::vector<ChangeRegion> change_regions(const SceneConfig& cfg) {
  const double m = noise_margin(cfg);
  std::vector<ChangeRegion> regions;
  for (const auto& b : cfg.new_buildings) {
    regions.push_back({ChangeRegion::Kind::NewBuilding, b.footprint.inflated(m), {}, 0.0, -m,
                       b.height + m});
  }
  for (const auto& d : cfg.demolished_buildings) {
    regions.push_back({ChangeRegion::Kind::Demolition, d.footprint, {}, 0.0, -m, m});
  }
  for (const auto& v : cfg.vegetation) {
    regions.push_back({ChangeRegion::Kind::Vegetation, {}, v.center, v.radius, 0.0, v.height});
  }
  for (const auto& c : cfg.clutter) {
    regions.push_back({ChangeRegion::Kind::Clutter,
                       Footprint{c.center.x() - c.half_x, c.center.y() - c.half_y,
                                 c.center.x() + c.half_x, c.center.y() + c.half_y}
                           .inflated(m),
                       {},
                       0.0,
                       -m,
                       c.height + m});
  }
  return regions;
}

Scene generate_scene(const SceneConfig& cfg) {
  validate(cfg);
  const double m = noise_margin(cfg);
  Rng rng(cfg.rng_seed);
  Scene scene;

  // t1: ground carved under the buildings that exist then (the ones to be
  // demolished), plus those buildings themselves.
  std::vector<XyRegion> carve_t1;
  for (const auto& d : cfg.demolished_buildings) {
    carve_t1.push_back({d.footprint.inflated(m), {}, 0.0});
  }
  sample_ground(rng, cfg, cfg.density_t1, carve_t1, {}, scene.pc1, false);
  for (const auto& d : cfg.demolished_buildings) {
    sample_building(rng, d.footprint, d.height, cfg.density_t1, cfg.wall_density_factor,
                    cfg.noise_sigma, scene.pc1,
                    kUnchanged, false);
  }

  // t2: ground carved under new buildings and clutter; the exposed
  // demolition footprints are marked changed on the ground points.
  std::vector<XyRegion> carve_t2;
  for (const auto& b : cfg.new_buildings) carve_t2.push_back({b.footprint.inflated(m), {}, 0.0});
  for (const auto& c : cfg.clutter) {
    carve_t2.push_back({Footprint{c.center.x() - c.half_x, c.center.y() - c.half_y,
                                  c.center.x() + c.half_x, c.center.y() + c.half_y}
                            .inflated(m),
                        {},
                        0.0});
  }
  std::vector<Footprint> demolition_marks;
  for (const auto& d : cfg.demolished_buildings) demolition_marks.push_back(d.footprint);
  sample_ground(rng, cfg, cfg.density_t2, carve_t2, demolition_marks, scene.pc2, true);
  for (const auto& b : cfg.new_buildings) {
    sample_building(rng, b.footprint, b.height, cfg.density_t2, cfg.wall_density_factor,
                    cfg.noise_sigma, scene.pc2,
                    kChanged, true);
  }
  for (const auto& v : cfg.vegetation) sample_vegetation(rng, v, cfg.density_t2, scene.pc2);
  for (const auto& c : cfg.clutter) {
    sample_building(rng,
                    Footprint{c.center.x() - c.half_x, c.center.y() - c.half_y,
                              c.center.x() + c.half_x, c.center.y() + c.half_y},
                    c.height, cfg.density_t2, cfg.wall_density_factor, cfg.noise_sigma,
                    scene.pc2, kChanged, true);
  }
  return scene;
}

std::string render_manifest(const SceneConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "scene.extent = " << cfg.extent << "\n";
  out << "scene.density_t1 = " << cfg.density_t1 << "\n";
  out << "scene.density_t2 = " << cfg.density_t2 << "\n";
  out << "scene.noise_sigma = " << cfg.noise_sigma << "\n";
  out << "scene.wall_density_factor = " << cfg.wall_density_factor << "\n";
  out << "scene.seed = " << cfg.rng_seed << "\n";
  for (const auto& b : cfg.new_buildings) {
    out << "scene.new_building = " << b.footprint.x0 << " " << b.footprint.y0 << " "
        << b.footprint.x1 << " " << b.footprint.y1 << " " << b.height << "\n";
  }
  for (const auto& d : cfg.demolished_buildings) {
    out << "scene.demolish_building = " << d.footprint.x0 << " " << d.footprint.y0 << " "
        << d.footprint.x1 << " " << d.footprint.y1 << " " << d.height << "\n";
  }
  for (const auto& v : cfg.vegetation) {
    out << "scene.new_vegetation = " << v.center.x() << " " << v.center.y() << " " << v.radius
        << " " << v.height << "\n";
  }
  for (const auto& c : cfg.clutter) {
    out << "scene.new_clutter = " << c.center.x() << " " << c.center.y() << " " << c.half_x << " "
        << c.half_y << " " << c.height << "\n";
  }
  return out.str();
}

}  // namespace pccd
