#pragma once

// Optical-lattice geometry: site differences -> interatomic phase, camera deskew, site
// assignment, synthetic fluorescence images, Gaussian PSF fitting and angle calibration.
//
// Lengths are micrometres unless a name says pixels (_px).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace cqed::lattice {

inline constexpr double kDegree = std::numbers::pi / 180.0;
// FWHM = 2 sqrt(2 ln 2) sigma
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

class GeometryError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct LatticeGeometry {
  double period_x = 0.532;  // transverse
  double period_y = 0.386;  // along the cavity axis
  double probe_wavelength = 0.780;
  double alpha = 0.0;  // global rotation, rad
  double beta = 0.0;   // skew, rad
  double pixel_scale = 0.48;  // um per pixel

  void validate() const {
    if (!(period_x > 0 && period_y > 0 && probe_wavelength > 0 && pixel_scale > 0))
      throw GeometryError("lattice periods, wavelength and pixel scale must be positive");
    if (!(std::abs(alpha) < 10 * kDegree && std::abs(beta) < 10 * kDegree))
      throw GeometryError("rotation and skew angles must be below 10 degrees");
  }
};

/// Rotation 0.64 deg and skew 1.6 deg of the characterised lattice.
inline LatticeGeometry reference_geometry() {
  LatticeGeometry g;
  g.alpha = 0.64 * kDegree;
  g.beta = 1.6 * kDegree;
  return g;
}

struct SiteDifference {
  int dnx = 0;
  int dny = 0;
  friend bool operator==(const SiteDifference&, const SiteDifference&) = default;
};

/// phi = dnx * (532/780) * 2pi + dny * pi, reduced to [0, 2pi).
///
/// 532/780 = 133/195, so phi/2pi = (266 dnx + 195 dny) / 390 is evaluated in integers and the
/// reduction is exact.
inline double phase_from_sites(SiteDifference d) {
  constexpr std::int64_t den = 390;
  std::int64_t num = (266 * static_cast<std::int64_t>(d.dnx) + 195 * static_cast<std::int64_t>(d.dny)) % den;
  if (num < 0) num += den;
  return 2.0 * std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
}

/// Same formula for arbitrary transverse period and probe wavelength.
inline double phase_from_sites(SiteDifference d, const LatticeGeometry& geom) {
  const double turns = std::fmod(d.dnx * geom.period_x / geom.probe_wavelength, 1.0) +
                       0.5 * static_cast<double>(((d.dny % 2) + 2) % 2);
  double phi = 2.0 * std::numbers::pi * (turns - std::floor(turns));
  if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
  return phi;
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
};

/// (x', y')^T = [[cos b, -sin b], [0, 1]] [[cos a, sin a], [-sin a, cos a]] (x, y)^T
inline Eigen::Matrix2d deskew_matrix(double alpha, double beta) {
  Eigen::Matrix2d shear, rot;
  shear << std::cos(beta), -std::sin(beta), 0.0, 1.0;
  rot << std::cos(alpha), std::sin(alpha), -std::sin(alpha), std::cos(alpha);
  return shear * rot;
}

inline Point apply(const Eigen::Matrix2d& m, Point p) {
  return {m(0, 0) * p.x + m(0, 1) * p.y, m(1, 0) * p.x + m(1, 1) * p.y};
}

/// Camera coordinates -> orthogonal lattice coordinates.
inline Point deskew(Point camera, const LatticeGeometry& geom) {
  return apply(deskew_matrix(geom.alpha, geom.beta), camera);
}

/// Orthogonal lattice coordinates -> camera coordinates.
inline Point reskew(Point lattice, const LatticeGeometry& geom) {
  return apply(deskew_matrix(geom.alpha, geom.beta).inverse(), lattice);
}

/// Lattice-frame position of site (nx, ny).
inline Point site_position(int nx, int ny, const LatticeGeometry& geom) {
  return {nx * geom.period_x, ny * geom.period_y};
}

// ---------------------------------------------------------------------------------------------

inline constexpr double kDefaultAssignThreshold = 0.35;  // fraction of a period

enum class AssignStatus { Ok, Ambiguous, SameSite };

struct SiteAssignment {
  AssignStatus status = AssignStatus::Ok;
  SiteDifference site;
  double residual = 0.0;  // max fractional distance to the nearest site, in periods
};

class AmbiguousAssignment : public std::runtime_error {
public:
  explicit AmbiguousAssignment(double residual)
      : std::runtime_error("ambiguous assignment: residual " + std::to_string(residual) +
                           " of a lattice period"),
        residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

/// Difference vector of a deskewed pair in lattice periods, rounded to the nearest site.
inline SiteAssignment assign_pair(Point first, Point second, const LatticeGeometry& geom,
                                  double threshold = kDefaultAssignThreshold) {
  const Point d = second - first;
  const double fx = d.x / geom.period_x;
  const double fy = d.y / geom.period_y;
  SiteAssignment out;
  out.site = {static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy))};
  out.residual = std::max(std::abs(fx - out.site.dnx), std::abs(fy - out.site.dny));
  if (out.residual > threshold) out.status = AssignStatus::Ambiguous;
  else if (out.site.dnx == 0 && out.site.dny == 0) out.status = AssignStatus::SameSite;
  return out;
}

/// Throwing variant: ambiguous pairs are discarded by the caller.
inline SiteDifference assign_pair_or_throw(Point first, Point second, const LatticeGeometry& geom,
                                           double threshold = kDefaultAssignThreshold) {
  const auto a = assign_pair(first, second, geom, threshold);
  if (a.status == AssignStatus::Ambiguous) throw AmbiguousAssignment(a.residual);
  if (a.status == AssignStatus::SameSite)
    throw std::runtime_error("both atoms assigned to the same site");
  return a.site;
}

inline std::vector<SiteAssignment> assign_sites(std::span<const std::pair<Point, Point>> pairs,
                                                const LatticeGeometry& geom,
                                                double threshold = kDefaultAssignThreshold) {
  std::vector<SiteAssignment> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back(assign_pair(a, b, geom, threshold));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Synthetic atom pairs.

struct PairSample {
  SiteDifference truth;
  Point first;   // camera frame, um, including position noise
  Point second;
};

struct PairSamplerSettings {
  int max_dnx = 5;
  int max_dny = 7;
  double sigma_um = 0.030;          // Gaussian position noise per atom and axis
  double min_separation_um = 0.0;   // closer pairs are redrawn
  Point centre{7.68, 7.68};         // camera position around which pairs are placed
  std::uint64_t seed = 1;
};

/// Uniformly drawn site differences (never (0, 0)) on a randomly offset lattice, mapped to the
/// camera frame with `reskew` and blurred by independent Gaussian noise.
inline std::vector<PairSample> sample_pairs(std::size_t n, const LatticeGeometry& geom,
                                            const PairSamplerSettings& s = {}) {
  geom.validate();
  std::mt19937_64 rng(s.seed);
  std::uniform_int_distribution<int> ux(-s.max_dnx, s.max_dnx), uy(-s.max_dny, s.max_dny);
  std::uniform_real_distribution<double> cell(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, s.sigma_um);
  std::vector<PairSample> out;
  out.reserve(n);
  while (out.size() < n) {
    const SiteDifference d{ux(rng), uy(rng)};
    if (d.dnx == 0 && d.dny == 0) continue;
    const Point offset{cell(rng) * geom.period_x, cell(rng) * geom.period_y};
    const int n1x = -d.dnx / 2, n1y = -d.dny / 2;
    const Point a = reskew(site_position(n1x, n1y, geom) + offset, geom) + s.centre;
    const Point b = reskew(site_position(n1x + d.dnx, n1y + d.dny, geom) + offset, geom) + s.centre;
    if (std::hypot(b.x - a.x, b.y - a.y) < s.min_separation_um) continue;
    PairSample p{d, a + Point{noise(rng), noise(rng)}, b + Point{noise(rng), noise(rng)}};
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Images.

struct AtomImage {
  int width = 0;
  int height = 0;
  std::vector<double> counts;  // row-major, counts[y * width + x]
  double background = 0.0;     // per pixel
  double amplitude = 0.0;      // integrated counts per atom
  double pixel_scale = 0.48;   // um per pixel
  double exposure_s = 0.75;

  double at(int x, int y) const { return counts[static_cast<std::size_t>(y) * width + x]; }

  void validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image must be non-empty");
    if (counts.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("image buffer size mismatch");
    for (double c : counts)
      if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("image counts must be finite and >= 0");
  }
};

/// Diffraction-limited FWHM (1.23 px, 1.78 px) inflated by the observed factor 1.5.
struct PsfWidths {
  double fwhm_x_px = 1.23 * 1.5;
  double fwhm_y_px = 1.78 * 1.5;
};

struct SynthSettings {
  int width = 32;
  int height = 32;
  PsfWidths psf;
  double amplitude = 18'000.0;  // integrated counts per atom
  double background = 450.0;    // counts per pixel
  bool shot_noise = true;
  std::uint64_t seed = 1;
  double exposure_s = 0.75;
};

namespace detail {
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Fraction of a unit-integral Gaussian (centre c, width s) falling into pixel i = [i-1/2, i+1/2].
inline double pixel_fraction(int i, double c, double s) {
  return normal_cdf((i + 0.5 - c) / s) - normal_cdf((i - 0.5 - c) / s);
}
}  // namespace detail

/// Pixel-integrated 2D Gaussians on a flat background with optional Poisson shot noise.
/// Positions are camera coordinates in um; pixel (i, j) is centred at (i, j) * pixel_scale.
inline AtomImage synth_image(std::span<const Point> positions, const LatticeGeometry& geom,
                             const SynthSettings& s) {
  AtomImage img;
  img.width = s.width;
  img.height = s.height;
  img.background = s.background;
  img.amplitude = s.amplitude;
  img.pixel_scale = geom.pixel_scale;
  img.exposure_s = s.exposure_s;
  img.counts.assign(static_cast<std::size_t>(s.width) * s.height, s.background);
  const double sx = s.psf.fwhm_x_px / kFwhmPerSigma;
  const double sy = s.psf.fwhm_y_px / kFwhmPerSigma;
  for (const Point& p : positions) {
    const double cx = p.x / geom.pixel_scale;
    const double cy = p.y / geom.pixel_scale;
    if (cx < -0.5 || cy < -0.5 || cx > s.width - 0.5 || cy > s.height - 0.5)
      throw std::invalid_argument("atom position outside the frame");
    std::vector<double> fx(static_cast<std::size_t>(s.width)), fy(static_cast<std::size_t>(s.height));
    for (int i = 0; i < s.width; ++i) fx[i] = detail::pixel_fraction(i, cx, sx);
    for (int j = 0; j < s.height; ++j) fy[j] = detail::pixel_fraction(j, cy, sy);
    for (int j = 0; j < s.height; ++j)
      for (int i = 0; i < s.width; ++i)
        img.counts[static_cast<std::size_t>(j) * s.width + i] += s.amplitude * fx[i] * fy[j];
  }
  if (s.shot_noise) {
    std::mt19937_64 rng(s.seed);
    for (double& c : img.counts) {
      std::poisson_distribution<long> pd(c);
      c = static_cast<double>(pd(rng));
    }
  }
  return img;
}

struct PsfFit {
  double x_px = 0.0;
  double y_px = 0.0;
  double fwhm_x_px = 0.0;
  double fwhm_y_px = 0.0;
  double amplitude = 0.0;   // integrated counts
  double background = 0.0;  // per pixel, shared by all atoms in the frame
  int iterations = 0;
};

class PsfOverlap : public std::runtime_error {
public:
  explicit PsfOverlap(double separation)
      : std::runtime_error("atoms too close for separate fits (" + std::to_string(separation) +
                           " px); frame discarded") {}
};

class FitNotConverged : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  int max_iterations = 200;
  double step_tolerance_px = 1e-4;
  double min_separation_px = 2.0;
  double initial_fwhm_px = 2.0;
};

namespace detail {

// Parameter layout: [background, (amplitude, x, y, sigma_x, sigma_y) per atom].
class GaussianModel {
public:
  GaussianModel(const AtomImage& img, int n_atoms) : img_(img), n_atoms_(n_atoms) {}

  int n_params() const { return 1 + 5 * n_atoms_; }

  void evaluate(const Eigen::VectorXd& p, Eigen::VectorXd& residual, Eigen::MatrixXd* jac) const {
    const int w = img_.width, h = img_.height;
    residual.resize(static_cast<Eigen::Index>(w) * h);
    if (jac) jac->setZero(residual.size(), n_params());
    residual.setConstant(p(0));
    if (jac) jac->col(0).setOnes();
    std::vector<double> fx(w), fy(h), dfx_c(w), dfy_c(h), dfx_s(w), dfy_s(h);
    for (int k = 0; k < n_atoms_; ++k) {
      const int o = 1 + 5 * k;
      const double amp = p(o), cx = p(o + 1), cy = p(o + 2), sx = p(o + 3), sy = p(o + 4);
      fill_axis(w, cx, sx, fx, dfx_c, dfx_s);
      fill_axis(h, cy, sy, fy, dfy_c, dfy_s);
      for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
          const Eigen::Index r = static_cast<Eigen::Index>(j) * w + i;
          residual(r) += amp * fx[i] * fy[j];
          if (jac) {
            (*jac)(r, o) = fx[i] * fy[j];
            (*jac)(r, o + 1) = amp * dfx_c[i] * fy[j];
            (*jac)(r, o + 2) = amp * fx[i] * dfy_c[j];
            (*jac)(r, o + 3) = amp * dfx_s[i] * fy[j];
            (*jac)(r, o + 4) = amp * fx[i] * dfy_s[j];
          }
        }
      }
    }
    for (Eigen::Index r = 0; r < residual.size(); ++r) residual(r) -= img_.counts[static_cast<std::size_t>(r)];
  }

private:
  static void fill_axis(int n, double c, double s, std::vector<double>& f, std::vector<double>& dc,
                        std::vector<double>& ds) {
    for (int i = 0; i < n; ++i) {
      const double a = (i - 0.5 - c) / s, b = (i + 0.5 - c) / s;
      const double pa = normal_pdf(a), pb = normal_pdf(b);
      f[i] = normal_cdf(b) - normal_cdf(a);
      dc[i] = (pa - pb) / s;
      ds[i] = (pa * a - pb * b) / s;
    }
  }

  const AtomImage& img_;
  int n_atoms_;
};

inline Eigen::VectorXd levenberg_marquardt(const GaussianModel& model, Eigen::VectorXd p,
                                           const FitOptions& opt, int& iterations) {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  model.evaluate(p, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool accepted = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      step = a.ldlt().solve(-jtr);
      Eigen::VectorXd trial = p + step;
      bool valid = trial.allFinite();
      for (int o = 1; valid && o < trial.size(); o += 5)
        valid = trial(o + 3) > 0.05 && trial(o + 4) > 0.05;
      if (valid) {
        Eigen::VectorXd rt;
        model.evaluate(trial, rt, nullptr);
        const double ct = rt.squaredNorm();
        if (ct <= cost) {
          p = trial;
          cost = ct;
          accepted = true;
          lambda = std::max(lambda / 10.0, 1e-12);
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // Cost cannot be reduced any more; converged to numerical precision.
      return p;
    }
    double max_geo = 0.0;
    for (int o = 1; o < step.size(); o += 5)
      max_geo = std::max({max_geo, std::abs(step(o + 1)), std::abs(step(o + 2)),
                          std::abs(step(o + 3)), std::abs(step(o + 4))});
    model.evaluate(p, r, &jac);
    if (max_geo < opt.step_tolerance_px) return p;
  }
  throw FitNotConverged("PSF fit did not converge within " + std::to_string(opt.max_iterations) +
                        " iterations");
}

inline double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Brightest 3x3 box sum; returns its centre.
inline std::pair<int, int> brightest(const AtomImage& img, const std::vector<double>& data) {
  double best = -std::numeric_limits<double>::infinity();
  std::pair<int, int> at{0, 0};
  for (int j = 0; j < img.height; ++j) {
    for (int i = 0; i < img.width; ++i) {
      double s = 0.0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int x = i + di, y = j + dj;
          if (x >= 0 && y >= 0 && x < img.width && y < img.height)
            s += data[static_cast<std::size_t>(y) * img.width + x];
        }
      if (s > best) {
        best = s;
        at = {i, j};
      }
    }
  }
  return at;
}

inline void initial_atom(const AtomImage& img, const std::vector<double>& data, double bg,
                         const FitOptions& opt, Eigen::VectorXd& p, int offset) {
  const auto [ix, iy] = brightest(img, data);
  double sum = 0.0, mx = 0.0, my = 0.0;
  for (int dj = -2; dj <= 2; ++dj)
    for (int di = -2; di <= 2; ++di) {
      const int x = ix + di, y = iy + dj;
      if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
      const double v = std::max(0.0, data[static_cast<std::size_t>(y) * img.width + x] - bg);
      sum += v;
      mx += v * x;
      my += v * y;
    }
  const double s0 = opt.initial_fwhm_px / kFwhmPerSigma;
  p(offset) = std::max(sum, 1.0);
  p(offset + 1) = sum > 0 ? mx / sum : ix;
  p(offset + 2) = sum > 0 ? my / sum : iy;
  p(offset + 3) = s0;
  p(offset + 4) = s0;
}

}  // namespace detail

/// Least-squares fit of `n_atoms` pixel-integrated Gaussians plus a flat background.
/// Two-atom frames whose centroids end up closer than `min_separation_px` are rejected.
inline std::vector<PsfFit> fit_psf(const AtomImage& image, int n_atoms, const FitOptions& opt = {}) {
  image.validate();
  if (n_atoms != 1 && n_atoms != 2) throw std::invalid_argument("fit_psf supports one or two atoms");

  const double bg0 = detail::median(image.counts);
  Eigen::VectorXd p1(6);
  p1(0) = bg0;
  detail::initial_atom(image, image.counts, bg0, opt, p1, 1);
  int it1 = 0;
  p1 = detail::levenberg_marquardt(detail::GaussianModel(image, 1), p1, opt, it1);

  Eigen::VectorXd p = p1;
  int iterations = it1;
  if (n_atoms == 2) {
    // Candidate seeds: the brightest spot of the single-atom residual, and the single-atom
    // centroid split along either axis. The lowest-cost converged fit wins.
    const detail::GaussianModel model2(image, 2);
    std::vector<Eigen::VectorXd> seeds;
    {
      Eigen::VectorXd r;
      detail::GaussianModel(image, 1).evaluate(p1, r, nullptr);
      std::vector<double> rest(image.counts.size());
      for (std::size_t k = 0; k < rest.size(); ++k) rest[k] = std::max(0.0, -r(static_cast<Eigen::Index>(k))) + p1(0);
      Eigen::VectorXd seed(11);
      seed.head(6) = p1;
      detail::initial_atom(image, rest, p1(0), opt, seed, 6);
      seeds.push_back(seed);
    }
    const double s0 = opt.initial_fwhm_px / kFwhmPerSigma;
    for (int axis = 0; axis < 2; ++axis) {
      const double half = std::max(p1(4 + axis) - s0, 0.5 * opt.min_separation_px);
      Eigen::VectorXd seed(11);
      seed << p1(0), 0.5 * p1(1), p1(2), p1(3), s0, s0, 0.5 * p1(1), p1(2), p1(3), s0, s0;
      seed(2 + axis) -= half;
      seed(7 + axis) += half;
      seeds.push_back(seed);
    }
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& seed : seeds) {
      int it2 = 0;
      Eigen::VectorXd q;
      try {
        q = detail::levenberg_marquardt(model2, seed, opt, it2);
      } catch (const FitNotConverged&) {
        continue;
      }
      iterations += it2;
      Eigen::VectorXd r;
      model2.evaluate(q, r, nullptr);
      if (r.squaredNorm() < best_cost) {
        best_cost = r.squaredNorm();
        p = q;
      }
    }
    if (!std::isfinite(best_cost)) throw FitNotConverged("two-atom fit did not converge from any seed");
    const double sep = std::hypot(p(2) - p(7), p(3) - p(8));
    if (sep < opt.min_separation_px) throw PsfOverlap(sep);
    // A merged pair is absorbed by one Gaussian and the other fits noise.
    if (std::min(p(1), p(6)) < 0.25 * std::max(p(1), p(6))) throw PsfOverlap(sep);
  }

  std::vector<PsfFit> out;
  for (int k = 0; k < n_atoms; ++k) {
    const int o = 1 + 5 * k;
    PsfFit f;
    f.amplitude = p(o);
    f.x_px = p(o + 1);
    f.y_px = p(o + 2);
    f.fwhm_x_px = kFwhmPerSigma * p(o + 3);
    f.fwhm_y_px = kFwhmPerSigma * p(o + 4);
    f.background = p(0);
    f.iterations = iterations;
    out.push_back(f);
  }
  std::sort(out.begin(), out.end(), [](const PsfFit& a, const PsfFit& b) {
    return a.x_px != b.x_px ? a.x_px < b.x_px : a.y_px < b.y_px;
  });
  return out;
}

inline Point to_um(const PsfFit& f, double pixel_scale) {
  return {f.x_px * pixel_scale, f.y_px * pixel_scale};
}

// ---------------------------------------------------------------------------------------------
// Angle calibration from pair difference vectors.

struct CalibrationOptions {
  double scan_half_range = 3.0 * kDegree;
  double scan_step = 0.02 * kDegree;
  double fit_half_window = 0.6 * kDegree;
  std::size_t min_pairs = 1000;
};

struct AngleScan {
  std::vector<double> angles;   // rad
  std::vector<double> fwhm_x;   // um
  std::vector<double> fwhm_y;   // um
};

struct AngleCalibration {
  double alpha = 0.0;
  double beta = 0.0;
  double theta_x = 0.0;  // rotation minimising the x-projected peak width
  double theta_y = 0.0;  // rotation minimising the y-projected peak width
  double min_fwhm_x = 0.0;
  double min_fwhm_y = 0.0;
  AngleScan scan;
};

class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Gaussian-equivalent FWHM of the lattice peaks after folding the projections onto one period.
inline std::pair<double, double> projected_peak_fwhm(std::span<const Point> diffs, double theta,
                                                     const LatticeGeometry& geom) {
  const double c = std::cos(theta), s = std::sin(theta);
  double sx = 0.0, sy = 0.0;
  for (const Point& d : diffs) {
    const double x = c * d.x + s * d.y;
    const double y = -s * d.x + c * d.y;
    const double rx = x - geom.period_x * std::nearbyint(x / geom.period_x);
    const double ry = y - geom.period_y * std::nearbyint(y / geom.period_y);
    sx += rx * rx;
    sy += ry * ry;
  }
  const double n = static_cast<double>(diffs.size());
  return {kFwhmPerSigma * std::sqrt(sx / n), kFwhmPerSigma * std::sqrt(sy / n)};
}

namespace detail {
// Vertex of a least-squares parabola through the samples within `half_window` of the discrete
// minimum.
inline std::pair<double, double> parabola_minimum(const std::vector<double>& x,
                                                  const std::vector<double>& y, double half_window) {
  const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  if (imin == 0 || imin + 1 == y.size()) throw CalibrationError("no clear minimum inside the scan range");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (std::abs(x[k] - x[imin]) <= half_window) idx.push_back(k);
  if (idx.size() < 5) throw CalibrationError("too few samples around the minimum");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(idx.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(idx.size()));
  const double x0 = x[imin];
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double u = x[idx[r]] - x0;
    a(static_cast<Eigen::Index>(r), 0) = u * u;
    a(static_cast<Eigen::Index>(r), 1) = u;
    a(static_cast<Eigen::Index>(r), 2) = 1.0;
    b(static_cast<Eigen::Index>(r)) = y[idx[r]];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  if (!(c(0) > 0.0)) throw CalibrationError("width curve is not convex near its minimum");
  const double u = -c(1) / (2.0 * c(0));
  if (std::abs(u) > half_window) throw CalibrationError("no clear minimum: parabola vertex outside fit window");
  return {x0 + u, c(2) - c(1) * c(1) / (4.0 * c(0))};
}
}  // namespace detail

/// Scans a global rotation of the raw difference vectors, locates the angles minimising the
/// projected peak widths and converts them to the deskew angles. With the deskew matrix above,
/// x' is the projection at theta = alpha - beta and y' the projection at theta = alpha.
inline AngleCalibration calibrate_angles(std::span<const Point> pair_differences,
                                         const LatticeGeometry& geom,
                                         const CalibrationOptions& opt = {}) {
  if (pair_differences.size() < opt.min_pairs)
    throw CalibrationError("insufficient data: " + std::to_string(pair_differences.size()) +
                           " pairs, need " + std::to_string(opt.min_pairs));
  AngleCalibration out;
  const int n = static_cast<int>(std::lround(opt.scan_half_range / opt.scan_step));
  for (int k = -n; k <= n; ++k) {
    const double th = k * opt.scan_step;
    const auto [fx, fy] = projected_peak_fwhm(pair_differences, th, geom);
    out.scan.angles.push_back(th);
    out.scan.fwhm_x.push_back(fx);
    out.scan.fwhm_y.push_back(fy);
  }
  std::tie(out.theta_x, out.min_fwhm_x) = detail::parabola_minimum(out.scan.angles, out.scan.fwhm_x, opt.fit_half_window);
  std::tie(out.theta_y, out.min_fwhm_y) = detail::parabola_minimum(out.scan.angles, out.scan.fwhm_y, opt.fit_half_window);
  out.alpha = out.theta_y;
  out.beta = out.theta_y - out.theta_x;
  return out;
}

}  // namespace cqed::lattice
