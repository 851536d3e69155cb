#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/fibration.hpp"
#include "kurv/jets.hpp"
#include "kurv/models.hpp"

// Empirical negativity certification: direction sampling, curvature suprema
// over points x directions, k-threshold search, asymptotic-order fits, and
// the constants (c0, C0, c1) controlling the vertical-curvature gap.
//
// Everything here is sampled, never proved.  Certificates carry their seeds
// and counts so any number can be regenerated bit-identically; the worker
// pool (KURV_THREADS) only splits index ranges, it never reorders the
// reduction, so thread count cannot change a single bit of the output.
namespace kurv::certifier {

using fibration::DirectionPair;
using jets::ChartPoint;

enum class Quantity { HSC, HBC };

// full:       Gaussian draw on all m+n complex coefficients.
// horizontal: b = 0, Gaussian a.        vertical: a = 0, Gaussian b.
// pairs:      (X, W) pairs for bisectional quantities.  Pair strata cycle
//             (full,full), (horiz,vert), (vert,horiz), (horiz,horiz),
//             (vert,vert) by sample index, so block-diagonal degeneracies
//             (where the supremum sits exactly on a mixed pair) are
//             represented exactly rather than almost-surely missed.
enum class SampleMode { Full, Horizontal, Vertical, Pairs };

const char* to_string(Quantity q);
const char* to_string(SampleMode m);

// Unit directions (sum of squared coefficient moduli = 1).  `second` is
// empty except in pairs mode.  Generation is chunked: chunk c of 512
// directions draws from derive_stream(seed, c), so a longer sample extends a
// shorter one with the same seed and workers can fill chunks independently.
struct DirectionSample {
  std::uint64_t seed = 0;
  int m = 0, n = 0;
  SampleMode mode = SampleMode::Full;
  std::vector<DirectionPair> first;
  std::vector<DirectionPair> second;

  int count() const { return static_cast<int>(first.size()); }
};

DirectionSample sample_directions(int m, int n, int count, std::uint64_t seed,
                                  SampleMode mode);

// Max over points x sample directions of the holomorphic sectional (HSC) or
// bisectional (HBC) curvature of the k-scaled metric, followed by 20 rounds
// of coordinate ascent from the best sample (raw Monte Carlo under-estimates
// suprema).  The ascent only moves coefficients the sample mode allows, so a
// horizontal sample reports the supremum over horizontal directions.
// HBC requires a pairs sample and HSC a non-pairs sample; degenerate metrics
// throw SingularMetric.
double sup_curvature(const models::ModelSpec& model,
                     std::span<const ChartPoint> points, double k, Quantity q,
                     const DirectionSample& sample);

// Result of a k-threshold search.  Plain data; everything needed to
// reproduce the run is recorded.  `certified` false is a result ("not
// certified on [k_min, k_max]"), not an error.
struct NegativityCertificate {
  std::string model;
  std::map<std::string, double> params;
  std::vector<ChartPoint> points;
  Quantity quantity = Quantity::HSC;
  double k_min = 0.0, k_max = 0.0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  int sample_count = 0;
  std::vector<double> k_grid;    // geometric scan, ratio 2, k_max appended
  std::vector<double> sup_per_k; // NaN where the metric was degenerate
  bool certified = false;
  double k0 = 0.0;               // meaningful iff certified
  bool empirical = true;         // always: sampled evidence, never a proof
};

// Geometric scan (ratio 2 from k_min) plus 30 bisection steps between the
// last failing and first succeeding scan k.  Non-monotone scans certify on
// the stable suffix only: every scan point from the suffix start on must
// satisfy sup < -tol.  If the whole grid passes, k0 = k_min.
NegativityCertificate find_threshold(const models::ModelSpec& model,
                                     std::span<const ChartPoint> points,
                                     Quantity q, double k_min, double k_max,
                                     const DirectionSample& sample,
                                     double tol);

// One scaling law: deviations dev[i] at k_grid[i], fitted on log-log scale
// (least squares, dropping the smallest k).  `exact` short-circuits the fit
// when every deviation sits at roundoff; `pass` is the acceptance verdict
// (exact, or slope inside the band around `target`; one_sided laws only
// require slope <= target + band, a bounded quantity may also decay).
struct LawFit {
  std::vector<double> dev;
  double target = 0.0;
  double band = 0.2;
  bool one_sided = false;
  bool exact = false;
  bool fitted = false;
  double slope = 0.0;
  double stderr_slope = 0.0;
  bool pass = false;
};

// Deviation laws for the large-k limit, all in max-entry norm:
//   hh:       |R_hh(k) - k R_base|        bounded   (slope ~ 0)
//   vv_fiber: |R_vv(k) - R_vert|          decays    (slope ~ -1)
//   vv_frame: |R_vv,frame(k) - R_vert,frame|  decays (slope ~ -1)
//   cross:    max over the four mixed blocks  bounded (one-sided)
struct AsymptoticsReport {
  std::string model;
  ChartPoint point;
  std::vector<double> k_grid;
  std::vector<bool> valid;  // false where the metric was degenerate
  LawFit hh, vv_fiber, vv_frame, cross;

  bool pass() const { return hh.pass && vv_fiber.pass && vv_frame.pass && cross.pass; }
};

// Grid must be strictly increasing with >= 5 points (>= 4 survive the
// dropped smallest k).  Degenerate metrics are reported per-k, not thrown.
AsymptoticsReport asymptotic_check(const models::ModelSpec& model,
                                   const ChartPoint& point,
                                   std::span<const double> k_grid);

// Suprema of the base and fiber holomorphic sectional curvatures over
// points x Gaussian directions.  eps_* = -sup; strict means the supremum
// was observed strictly negative, i.e. eps_* > 0 genuinely.
struct HscSupEstimate {
  double base_sup = 0.0, fiber_sup = 0.0;
  double eps_base = 0.0, eps_fiber = 0.0;
  bool base_strict = false, fiber_strict = false;
  int samples = 0;
  std::uint64_t seed = 0;
};

HscSupEstimate estimate_hsc_sup_base_fiber(const models::ModelSpec& model,
                                           std::span<const ChartPoint> points,
                                           int samples,
                                           std::uint64_t seed = 2024);

// Empirical constants of the vertical-curvature gap.  Ratios use the
// reference norms ||X||^2 = ||a||^2_psi + ||b||^2_phi and ||V||^2_phi:
//   c0 = min, C0 = max of -R^V(X,Xbar,V,Vbar) / (||X||^2 ||V||^2)
//   c1 = min over (Y horizontal, Z vertical, V) of
//        (2 sqrt(R^V_ZZ R^V_YY) - |R^V_YZ + R^V_ZY|) / (||V||^2 ||Z|| ||Y||)
//   eps_griffiths = c1 / (2 C0) when both are positive, else 0.
// X draws cycle full/horizontal/vertical strata so block-degenerate models
// report their exact zero bounds.  Samples with a vanishing denominator or a
// sign-mixed sqrt argument are skipped and counted.
struct GriffithsBounds {
  double c0 = 0.0, C0 = 0.0, c1 = 0.0;
  double eps_griffiths = 0.0;
  bool griffiths_negative = false;  // c0 observed strictly positive
  long skipped = 0;
  int samples = 0;
  std::uint64_t seed = 0;
};

GriffithsBounds estimate_griffiths_bounds(const models::ModelSpec& model,
                                          std::span<const ChartPoint> points,
                                          int samples,
                                          std::uint64_t seed = 2024);

}  // namespace kurv::certifier
