#pragma once

#include "grainstack/raster.hpp"

namespace grainstack {

enum class Connectivity { four = 4, eight = 8 };

Connectivity parse_connectivity(int n);

// Labels each maximal connected set of interior (0) pixels with ids 1, 2, ...
// in raster-scan order of each component's first pixel. Boundary pixels get 0.
// Pipeline default: 4-connected interiors against 8-connected boundaries.
LabelGrid connected_components(const BoundaryGrid& boundary,
                               Connectivity connectivity = Connectivity::four);

// Splits every nonzero id into its connected pieces and renumbers them in
// raster-scan order. Zeros stay zero.
LabelGrid label_regions(const LabelGrid& labels, Connectivity connectivity = Connectivity::four);

// Marks a pixel as boundary iff a neighbor (in the chosen neighborhood) has a
// different id. Both sides of every interface are marked; id-0 pixels are
// boundary by definition.
BoundaryGrid labels_to_boundary(const LabelGrid& labels,
                                Connectivity neighborhood = Connectivity::four);

// Exact squared Euclidean distance to the nearest 1-pixel (lower-envelope
// method, separable in x and y). Values are exact integers.
Raster<double> squared_distance_transform(const BoundaryGrid& boundary);

// Exact Euclidean distance to the nearest boundary pixel. Throws
// ValidationError if the grid has no boundary pixel.
DistanceField distance_transform(const BoundaryGrid& boundary);

// Pixels within Euclidean distance <= radius of any 1-pixel.
BoundaryGrid dilate(const BoundaryGrid& boundary, double radius);

// Topology-preserving thinning to single-pixel width. Foreground is
// 8-connected, background 4-connected; only simple points are deleted and
// curve endpoints are kept. Leftover 2x2 blocks are broken where a simple
// pixel exists.
BoundaryGrid skeletonize(const BoundaryGrid& boundary);

// Number of 2x2 windows whose four pixels are all boundary.
std::size_t count_square_blocks(const BoundaryGrid& boundary);

// True when deleting (x, y) from the foreground preserves 8/4 topology.
bool is_simple_point(const BoundaryGrid& grid, int x, int y);

}  // namespace grainstack
