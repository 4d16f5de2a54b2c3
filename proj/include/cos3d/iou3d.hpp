#pragma once

#include <cstdint>

#include "cos3d/geometry.hpp"

namespace cos3d {

enum class Iou3dPath {
    Auto,     // yaw-aligned fast path when both boxes share the up-axis
    General,  // full polyhedron clipping
    YawFast   // force the BEV-polygon x height-overlap route
};

// Volumetric IoU between oriented boxes. The intersection is a's polytope
// clipped against b's six half-spaces; volume via the divergence theorem.
// Throws std::invalid_argument when either box has non-positive volume.
double iou3dExact(const Box3D& a, const Box3D& b, Iou3dPath path = Iou3dPath::Auto);

// Monte-Carlo estimate over the AABB of the two corner sets: ratio of points
// inside both boxes to points inside either. Deterministic given the seed.
double iou3dOracle(const Box3D& a, const Box3D& b, std::uint64_t samples, std::uint64_t seed);

// Standard rectangle IoU on the pixel view.
double iou2d(const Box2D& a, const Box2D& b);
double rectIou(const PixelRect& a, const PixelRect& b);

bool pointInBox(const Eigen::Vector3d& p, const Box3D& box);

}  // namespace cos3d
