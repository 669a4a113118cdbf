#pragma once

// Seeded marina scenarios shared by the harness tests and the acceptance driver.

#include <cstdint>

#include "xvloc/simulator.hpp"

namespace scenarios {

// Odometry biased by 5 cm/s plus white noise on every sensor.
inline xvloc::NoiseSpec biased_noise() { return {0.05, 0.02, 0.02, 0.05, 0.02}; }

// Long, narrow basin with piers off both long shores.
inline xvloc::WorldSpec marina_world(std::uint64_t seed) {
  xvloc::WorldSpec w;
  w.width_m = 240;
  w.height_m = 80;
  w.pier_count = 24;
  w.pier_length_min_m = 18;
  w.pier_length_max_m = 24;
  w.pier_edges = {"south", "north"};
  w.movable_count = 4;
  w.seed = seed;
  return w;
}

// Along the pier tips and half way back (~340 m at 0.5 m/s).
inline xvloc::RunSpec marina_route() {
  xvloc::RunSpec r;
  r.waypoints = {{12, 32}, {228, 32}, {228, 48}, {120, 48}};
  return r;
}

// Piers on the south shore only; the north half is open water.
inline xvloc::WorldSpec excursion_world(std::uint64_t seed) {
  xvloc::WorldSpec w;
  w.width_m = 240;
  w.height_m = 150;
  w.pier_count = 16;
  w.pier_length_min_m = 18;
  w.pier_length_max_m = 24;
  w.pier_edges = {"south"};
  w.movable_count = 3;
  w.seed = seed;
  return w;
}

// Along the pier tips, out into open water, 20 m west, back and onward.
inline xvloc::RunSpec excursion_route() {
  xvloc::RunSpec r;
  r.waypoints = {{12, 32}, {130, 32}, {130, 100}, {110, 100}, {110, 32}, {228, 32}};
  return r;
}

}  // namespace scenarios
