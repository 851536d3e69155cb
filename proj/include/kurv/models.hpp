#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kurv/common.hpp"
#include "kurv/jets.hpp"
#include "kurv/series.hpp"

namespace kurv::fibration {
struct FibrationJet;
}

namespace kurv::models {

// Hypothesis combination a model exercises; every set flag is backed by a
// test on the builtin catalog.
struct Flags {
  bool fiberwise_positive = false;
  bool base_negative_hsc = false;
  bool base_negative_hbc = false;
  bool griffiths_negative_vertical = false;
  bool ke_family = false;
  bool effectively_parametrized = false;
};

struct ParamSpec {
  std::string name;
  double def = 0.0, lo = 0.0, hi = 0.0;
};

struct CatalogEntry {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  int m = 1, n = 1;  // defaults; adjustable entries accept m, n in 1..3
  bool dims_adjustable = false;
  double base_radius = 0.0, fiber_radius = 0.0;
  Flags flags;
};

// A concrete chart model: weight phi on the total space, weight psi on the
// base, with closed forms registered both as plain evaluations and as
// jet-arithmetic evaluations.  Synthetic entries carry no closed form.
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
  int m = 0, n = 0;
  double base_radius = 0.0, fiber_radius = 0.0;
  // Clearance to the nearest singularity of the closed form, per coordinate
  // kind; finite-difference stencils must stay inside this radius.
  double base_sing = 1.0, fiber_sing = 1.0;
  Flags flags;
  bool synthetic = false;
  std::uint64_t seed = 0;

  std::function<Cplx(const jets::Coords<Cplx>&)> phi_value, psi_value;
  std::function<wirt::Series(const jets::Coords<wirt::Series>&)> phi_jet,
      psi_jet;

  double param(const std::string& key) const;
  void require_inside(const jets::ChartPoint& p) const;
  // Finite-difference step scale per coordinate (distance to singularity).
  std::vector<double> fd_scales(const jets::ChartPoint& p) const;
};

const std::vector<CatalogEntry>& catalog();

ModelSpec instantiate(const std::string& name,
                      const std::map<std::string, double>& params = {});

// Synthetic order-4 fibration jet: centered complex Gaussian coefficients
// (scale 0.3) symmetrized for reality, plus diagonal Hessian shifts so the
// vertical and base Hessians have min eigenvalue >= 0.5.  Bit-reproducible
// from (m, n, seed).
fibration::FibrationJet random_fibration_jet(int m, int n, std::uint64_t seed);

}  // namespace kurv::models
