#pragma once

// The four space-time building blocks of the swept decomposition. Each is a
// pure function of its inputs; the exact slab footprints are tabulated in
// docs/geometry.md.

#include "swept/grid.hpp"

namespace swept {

struct PyramidPanels {
  Panel north;
  Panel south;
  Panel west;
  Panel east;
};

struct LongitudinalPanels {
  Panel west;
  Panel east;
};

struct LatitudinalPanels {
  Panel north;
  Panel south;
};

/// Grows an upward pyramid from `base` for n/2 levels and returns its four
/// sides. Level k of every panel holds values at sub-step base.step() + k.
PyramidPanels upward_pyramid(const StencilProgram& prog, const Grid& base);

/// Fills the valley between a northern pyramid (its South panel, `north`) and
/// a southern pyramid (its North panel, `south`).
LongitudinalPanels longitudinal_bridge(const StencilProgram& prog, const Panel& north, const Panel& south);

/// Fills the valley between a western pyramid (its East panel, `west`) and an
/// eastern pyramid (its West panel, `east`).
LatitudinalPanels latitudinal_bridge(const StencilProgram& prog, const Panel& west, const Panel& east);

/// Fills the inverted pyramid enclosed by four bridge panels. Each argument is
/// the bridge side facing the pyramid: `north` is the South side of the
/// latitudinal bridge above it, `west` the East side of the longitudinal
/// bridge to its left, and so on. Returns the n-by-n grid at
/// start_step + n/2.
Grid downward_pyramid(const StencilProgram& prog, const Panel& north, const Panel& south, const Panel& west,
                      const Panel& east);

}  // namespace swept
