#include "spindiff/linewidth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spindiff/errors.hpp"
#include "spindiff/parallel.hpp"
#include "spindiff/units.hpp"

namespace spindiff {

namespace {

constexpr double kFwhmFactor = 8.0 * 0.69314718055994530942;  // 8 ln 2

bool same_point(const Vec3& a, const Vec3& b) { return norm2(a - b) == 0.0; }

}  // namespace

std::vector<double> couplings_from(const Vec3& central, std::span<const Vec3> others,
                                   const Vec3& field_dir, const SpinSpecies& species) {
  std::vector<double> d;
  d.reserve(others.size());
  for (const auto& p : others) {
    if (same_point(p, central)) continue;
    d.push_back(coupling(p - central, field_dir, species, species));
  }
  return d;
}

MomentValue m2_single_quantum(const Vec3& central, std::span<const Vec3> others,
                              const Vec3& field_dir, const SpinSpecies& species,
                              const MomentCoefficients& coeffs) {
  const auto d = couplings_from(central, others, field_dir, species);
  if (d.empty()) return {0.0, true};
  double s = 0.0;
  for (const double v : d) s += v * v;
  return {coeffs.sq * s, false};
}

MomentValue m2_zero_quantum(const Vec3& i, const Vec3& j,
                            std::span<const Vec3> background, const Vec3& field_dir,
                            const SpinSpecies& species,
                            const MomentCoefficients& coeffs) {
  require(!same_point(i, j), ErrorKind::Domain, "flip-flop partners coincide");
  double diff = 0.0;
  double sum = 0.0;
  bool any = false;
  for (const auto& k : background) {
    if (same_point(k, i) || same_point(k, j)) continue;
    any = true;
    const double dik = coupling(k - i, field_dir, species, species);
    const double djk = coupling(k - j, field_dir, species, species);
    diff += (dik - djk) * (dik - djk);
    sum += dik * dik + djk * djk;
  }
  double m2 = coeffs.zq * diff + coeffs.zq_flipflop * sum;
  if (coeffs.zq_pair != 0.0) {
    const double dij = coupling(j - i, field_dir, species, species);
    m2 += coeffs.zq_pair * dij * dij;
  }
  return {m2, !any};
}

double fwhm_from_m2(double m2) noexcept { return std::sqrt(kFwhmFactor * std::max(m2, 0.0)); }
double m2_from_fwhm(double fwhm) noexcept { return fwhm * fwhm / kFwhmFactor; }

std::string_view to_string(Averaging a) noexcept {
  switch (a) {
    case Averaging::GrandMeanM2: return "grand_mean_m2";
    case Averaging::SampleWidth: return "sample_width";
    case Averaging::PairWidth: return "pair_width";
  }
  return "";
}

std::optional<Averaging> parse_averaging(std::string_view name) noexcept {
  if (name == "grand_mean_m2") return Averaging::GrandMeanM2;
  if (name == "sample_width") return Averaging::SampleWidth;
  if (name == "pair_width") return Averaging::PairWidth;
  return std::nullopt;
}

std::string_view to_string(TargetWeighting w) noexcept {
  return w == TargetWeighting::Uniform ? "uniform" : "flip_flop_rate";
}

std::optional<TargetWeighting> parse_target_weighting(std::string_view name) noexcept {
  if (name == "uniform") return TargetWeighting::Uniform;
  if (name == "flip_flop_rate") return TargetWeighting::FlipFlopRate;
  return std::nullopt;
}

double LineWidthResult::orientation_relative_spread() const {
  const auto& v = orientation_fwhm_zq;
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return mean > 0.0 ? std::sqrt(ss / (v.size() - 1)) / mean : 0.0;
}

namespace {

// Geometry of one lattice realisation inside the background sphere, stored
// structure-of-arrays as unit vectors and coupling magnitudes so that each
// orientation only needs dot products.
struct DirectionArrays {
  std::vector<double> x, y, z, amp;

  void push(const Vec3& r, double prefactor) {
    const double len = norm(r);
    x.push_back(r.x / len);
    y.push_back(r.y / len);
    z.push_back(r.z / len);
    amp.push_back(prefactor / (len * len * len));
  }
  void push_zero() {
    x.push_back(0.0);
    y.push_back(0.0);
    z.push_back(0.0);
    amp.push_back(0.0);
  }
  std::size_t size() const noexcept { return amp.size(); }
};

struct LocalCluster {
  std::size_t n_targets = 0;
  DirectionArrays center;          // central -> k
  std::vector<DirectionArrays> pairs;  // per target j: j -> k, zero at k == j
};

LocalCluster make_cluster(std::span<const TemplateSite> sites, const Occupation& rule,
                          double target_radius, double prefactor) {
  LocalCluster c;
  std::vector<Vec3> pos;
  for (const auto& s : sites) {
    if (!rule.occupied(s.key)) continue;
    pos.push_back(s.position);
    c.center.push(s.position, prefactor);
    if (s.distance <= target_radius) ++c.n_targets;
  }
  c.pairs.resize(c.n_targets);
  for (std::size_t j = 0; j < c.n_targets; ++j) {
    auto& pj = c.pairs[j];
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (k == j) {
        pj.push_zero();
      } else {
        pj.push(pos[k] - pos[j], prefactor);
      }
    }
  }
  return c;
}

inline void couplings_along(const DirectionArrays& d, const Vec3& u, double* out) {
  const std::size_t n = d.size();
  const double* x = d.x.data();
  const double* y = d.y.data();
  const double* z = d.z.data();
  const double* a = d.amp.data();
  for (std::size_t k = 0; k < n; ++k) {
    const double c = x[k] * u.x + y[k] * u.y + z[k] * u.z;
    out[k] = a[k] * (1.5 * c * c - 0.5);
  }
}

struct SampleMoments {
  double m2_sq = 0.0;
  double m2_zq = 0.0;
  double pair_fwhm_zq = 0.0;  // target-mean of per-pair widths
};

struct Scratch {
  std::vector<double> dc, djk;
};

SampleMoments sample_moments(const LocalCluster& c, const Vec3& u,
                             const LinewidthOptions& opt, Scratch& scratch) {
  const std::size_t nb = c.center.size();
  scratch.dc.resize(nb);
  scratch.djk.resize(nb);
  double* dc = scratch.dc.data();
  double* djk = scratch.djk.data();
  couplings_along(c.center, u, dc);
  double sq = 0.0;
  for (std::size_t k = 0; k < nb; ++k) sq += dc[k] * dc[k];
  const auto& co = opt.coefficients;
  double wsum = 0.0;
  double zsum = 0.0;
  double usum = 0.0;
  double fsum = 0.0;
  double ufsum = 0.0;
  for (std::size_t j = 0; j < c.n_targets; ++j) {
    couplings_along(c.pairs[j], u, djk);
    double diff = 0.0;
    double both = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      const double t = dc[k] - djk[k];
      diff += t * t;
      both += dc[k] * dc[k] + djk[k] * djk[k];
    }
    // The k == j term entered with djk = 0; remove it.
    diff -= dc[j] * dc[j];
    both -= dc[j] * dc[j];
    const double m2 = std::max(
        0.0, co.zq * diff + co.zq_flipflop * both + co.zq_pair * dc[j] * dc[j]);
    const double w = opt.target_weighting == TargetWeighting::Uniform ? 1.0 : dc[j] * dc[j];
    const double f = fwhm_from_m2(m2);
    wsum += w;
    zsum += w * m2;
    usum += m2;
    fsum += w * f;
    ufsum += f;
  }
  SampleMoments s;
  s.m2_sq = co.sq * sq;
  s.m2_zq = wsum > 0.0 ? zsum / wsum : usum / static_cast<double>(c.n_targets);
  s.pair_fwhm_zq = wsum > 0.0 ? fsum / wsum : ufsum / static_cast<double>(c.n_targets);
  return s;
}

// Occupation average of the SQ moment: f * sum over every site of d^2.
double expected_sq(std::span<const TemplateSite> sites, double abundance, double prefactor,
                   const Vec3& u) {
  double s = 0.0;
  for (const auto& site : sites) {
    const double d = prefactor / (site.distance * site.distance * site.distance) *
                     angular_factor(dot(site.position, u) / site.distance);
    s += d * d;
  }
  return abundance * s;
}

}  // namespace

LineWidthResult powder_linewidths(const LinewidthRequest& request) {
  require(request.ensemble_size >= 1, ErrorKind::Domain, "ensemble size must be >= 1");
  require(request.abundance > 0.0 && request.abundance <= 1.0, ErrorKind::Domain,
          "abundance must lie in (0, 1]");
  require(request.options.background_factor >= 1.0, ErrorKind::Domain,
          "background factor must be >= 1");
  double target_radius = 0.0;
  if (request.cutoff) {
    target_radius = *request.cutoff;
  } else {
    CutoffRequest cr;
    cr.structure = request.structure;
    cr.abundance = request.abundance;
    cr.weight_kind = WeightKind::DSquared;
    cr.ensemble_size = request.cutoff_ensemble;
    cr.threshold = request.threshold;
    cr.extent = request.cutoff_extent;
    cr.seed = request.seed;
    cr.threads = request.threads;
    target_radius = cutoff_radius(cr).radius;
  }
  require(target_radius > 0.0, ErrorKind::Domain, "target radius must be positive");
  const double tol = 1e-9 * request.structure.lattice_constant();
  const double background_radius = request.options.background_factor * target_radius + tol;
  const auto sphere = SiteTemplate::sphere(request.structure, background_radius);
  const auto orient = zcw_orientations(request.n_orientations);
  const std::size_t no = orient.orientations.size();
  const std::size_t nl = request.ensemble_size;
  const double prefactor = std::abs(coupling_prefactor(request.species, request.species));
  const auto& opt = request.options;

  // [lattice][orientation] sample moments; empty row marks an isolated lattice.
  std::vector<std::vector<SampleMoments>> samples(nl);
  parallel_for(nl, request.threads, [&](std::size_t m) {
    const Occupation rule(request.abundance,
                          member_seed(request.seed, m, request.abundance));
    if (request.abundance == 1.0 && m > 0) return;  // every member is identical
    const auto cluster = make_cluster(sphere.sites(), rule, target_radius + tol,
                                      prefactor);
    if (cluster.n_targets == 0) return;
    Scratch scratch;
    auto& row = samples[m];
    row.resize(no);
    for (std::size_t o = 0; o < no; ++o) {
      row[o] = sample_moments(cluster, orient.orientations[o].direction(), opt, scratch);
    }
  });
  if (request.abundance == 1.0) {
    for (std::size_t m = 1; m < nl; ++m) samples[m] = samples[0];
  }
  if (opt.exact_sq_average) {
    std::vector<double> exact(no);
    parallel_for(no, request.threads, [&](std::size_t o) {
      exact[o] = opt.coefficients.sq * expected_sq(sphere.sites(), request.abundance, prefactor,
                                                  orient.orientations[o].direction());
    });
    for (auto& row : samples) {
      for (std::size_t o = 0; o < row.size(); ++o) row[o].m2_sq = exact[o];
    }
  }

  LineWidthResult r;
  r.structure = request.structure.kind();
  r.abundance = request.abundance;
  r.n_orientations = no;
  r.cutoff = target_radius;
  r.seed = request.seed;
  std::vector<double> lattice_sq;
  std::vector<double> lattice_zq;
  std::vector<double> orient_sq(no, 0.0);
  std::vector<double> orient_zq(no, 0.0);
  double grand_sq = 0.0;
  double grand_zq = 0.0;
  for (std::size_t m = 0; m < nl; ++m) {
    if (samples[m].empty()) {
      ++r.n_isolated;
      continue;
    }
    double msq = 0.0, mzq = 0.0, wsq = 0.0, wzq = 0.0;
    for (std::size_t o = 0; o < no; ++o) {
      const auto& s = samples[m][o];
      const double w = orient.orientations[o].weight;
      msq += w * s.m2_sq;
      mzq += w * s.m2_zq;
      if (opt.averaging != Averaging::GrandMeanM2) {
        const double fs = fwhm_from_m2(s.m2_sq);
        const double fz = opt.averaging == Averaging::SampleWidth ? fwhm_from_m2(s.m2_zq)
                                                                  : s.pair_fwhm_zq;
        wsq += w * fs;
        wzq += w * fz;
        orient_sq[o] += fs;
        orient_zq[o] += fz;
      } else {
        orient_sq[o] += s.m2_sq;
        orient_zq[o] += s.m2_zq;
      }
    }
    grand_sq += msq;
    grand_zq += mzq;
    if (opt.averaging != Averaging::GrandMeanM2) {
      lattice_sq.push_back(wsq);
      lattice_zq.push_back(wzq);
    } else {
      lattice_sq.push_back(fwhm_from_m2(msq));
      lattice_zq.push_back(fwhm_from_m2(mzq));
    }
  }
  r.n_lattices = lattice_zq.size();
  require(r.n_lattices > 0, ErrorKind::DegenerateAbundance,
          "no lattice has a target spin within the cut-off at abundance " +
              std::to_string(request.abundance));
  const double n = static_cast<double>(r.n_lattices);
  r.m2_sq = grand_sq / n;
  r.m2_zq = grand_zq / n;
  auto mean_std = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0};
  };
  const auto [msq, ssq] = mean_std(lattice_sq);
  const auto [mzq, szq] = mean_std(lattice_zq);
  r.std_sq = ssq;
  r.std_zq = szq;
  if (opt.averaging != Averaging::GrandMeanM2) {
    r.fwhm_sq = msq;
    r.fwhm_zq = mzq;
    for (std::size_t o = 0; o < no; ++o) {
      orient_sq[o] /= n;
      orient_zq[o] /= n;
    }
  } else {
    r.fwhm_sq = fwhm_from_m2(r.m2_sq);
    r.fwhm_zq = fwhm_from_m2(r.m2_zq);
    for (std::size_t o = 0; o < no; ++o) {
      orient_sq[o] = fwhm_from_m2(orient_sq[o] / n);
      orient_zq[o] = fwhm_from_m2(orient_zq[o] / n);
    }
  }
  r.orientation_fwhm_sq = std::move(orient_sq);
  r.orientation_fwhm_zq = std::move(orient_zq);
  return r;
}

SpectralDensity p_zero(double fwhm_hz) {
  require(fwhm_hz > 0.0 && std::isfinite(fwhm_hz), ErrorKind::Domain,
          "line width must be positive and finite");
  return {units::gaussian_peak_times_fwhm / fwhm_hz, LineShapeSource::GaussianFromFwhm};
}

SpectralDensity p_zero(const LineWidthResult& line) { return p_zero(line.fwhm_zq); }

SpectralDensity p_zero(std::span<const double> offsets_hz, std::span<const double> intensity) {
  require(offsets_hz.size() == intensity.size() && offsets_hz.size() >= 2,
          ErrorKind::Normalization, "tabulated line needs >= 2 matching points");
  for (std::size_t i = 0; i < offsets_hz.size(); ++i) {
    require(std::isfinite(offsets_hz[i]) && std::isfinite(intensity[i]) && intensity[i] >= 0.0,
            ErrorKind::Normalization, "tabulated line has a negative or non-finite entry");
    if (i > 0) {
      require(offsets_hz[i] > offsets_hz[i - 1], ErrorKind::Normalization,
              "tabulated offsets must be strictly increasing");
    }
  }
  require(offsets_hz.front() <= 0.0 && offsets_hz.back() >= 0.0, ErrorKind::Normalization,
          "tabulated line does not bracket zero offset");
  double area = 0.0;
  for (std::size_t i = 1; i < offsets_hz.size(); ++i) {
    area += 0.5 * (intensity[i] + intensity[i - 1]) * (offsets_hz[i] - offsets_hz[i - 1]);
  }
  require(area > 0.0, ErrorKind::Normalization, "tabulated line has zero area");
  const auto it = std::lower_bound(offsets_hz.begin(), offsets_hz.end(), 0.0);
  const std::size_t hi = static_cast<std::size_t>(it - offsets_hz.begin());
  double at_zero = 0.0;
  if (offsets_hz[hi] == 0.0) {
    at_zero = intensity[hi];
  } else {
    const std::size_t lo = hi - 1;
    const double t = (0.0 - offsets_hz[lo]) / (offsets_hz[hi] - offsets_hz[lo]);
    at_zero = intensity[lo] + t * (intensity[hi] - intensity[lo]);
  }
  return {at_zero / area, LineShapeSource::ExperimentalTabulated};
}

}  // namespace spindiff

namespace spindiff {

CsvTable linewidth_csv(std::span<const LineWidthResult> rows) {
  CsvTable t;
  t.columns = {"structure", "abundance_percent", "fwhm_sq_hz", "fwhm_zq_hz", "std_hz",
               "n_lattices", "n_orientations", "seed"};
  for (const auto& r : rows) {
    t.rows.push_back({std::string(to_string(r.structure)), format_number(r.abundance * 100.0),
                      format_number(r.fwhm_sq), format_number(r.fwhm_zq),
                      format_number(r.std_zq), std::to_string(r.n_lattices),
                      std::to_string(r.n_orientations), std::to_string(r.seed)});
  }
  return t;
}

}  // namespace spindiff
