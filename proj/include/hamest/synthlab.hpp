#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hamest/beamgeom.hpp"
#include "hamest/objective.hpp"
#include "hamest/qdyn.hpp"

namespace hamest::synthlab {

// Closed-form transport programs. Velocity is zero outside [0, t_end].
struct VelocityProgram {
  enum class Kind { constant, raised_cosine, sine_sq_sharp };
  Kind kind = Kind::raised_cosine;
  double v_peak = 1.2;   // m/s
  double t_end = 40e-6;  // s

  double value(double t) const;
};

// Spatial coupling profile along the transport axis (lab coordinates):
// peak * exp(-2 (z - center)^2 / half_width^2).
struct RabiProfile {
  double peak = 2.0 * M_PI * 250e3;  // rad/s
  double half_width = 75e-6;         // 1/e^2 half-width, m
  double center = 12e-6;             // m

  double value(double z) const;
};

struct Scenario {
  std::string name;
  VelocityProgram velocity;
  beamgeom::BeamGeometry geometry;
  RabiProfile rabi;
  std::vector<double> t_off_s;
  std::vector<double> delta_L_rad_s;
  int shots = 100;
  std::uint64_t seed = 1;
  double z0 = 0.0;  // lab ion position at t = 0, m

  // Basis used to carry the dense-sampled truth curves.
  double truth_knot_pitch = 0.5e-6;
  int truth_order = 4;

  void validate() const;
};

std::vector<double> linspace(double lo, double hi, int n);

// Integrates the transport program and returns the implied model:
// delta(t) = -D(z(t)) zdot(t) (the offset-independent part) and
// Omega(t) = rabi(z(t)), both dense-fitted onto the truth basis.
qdyn::HamiltonianModel realize_truth(const Scenario& scn);

// Truth model -> population grid -> projection-noise counts, with scenario
// metadata attached. Deterministic per (scenario, seed).
objective::Dataset generate_dataset(const Scenario& scn,
                                    const qdyn::SolverConfig& cfg = {});

// The four named presets: A beam centered on the transport range, B the same
// transport with the beam displaced by +64 um, C/D a common beam with two
// different velocity programs.
std::map<std::string, Scenario> paper_like_scenarios();

// Undersampled variant: coupling peak near 2pi*0.95 MHz against a 2 us
// sampling pitch, used to probe band inflation at the peak.
Scenario nyquist_scenario();

}  // namespace hamest::synthlab
