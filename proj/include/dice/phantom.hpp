#pragma once

#include <cstdint>
#include <vector>

#include "dice/image.hpp"

namespace dice {

struct Ellipse {
  double intensity;
  double semi_x;  // semi-axis along x before rotation, in units of the half-width
  double semi_y;
  double center_x;
  double center_y;
  double angle_deg;  // counter-clockwise
};

/// Sum of ellipse indicators on [-1, 1]^2, clamped to [0, inf), averaged over
/// a supersample x supersample grid inside each pixel (1 = pixel centres) and
/// divided by its maximum.
Image rasterize_ellipses(int side, const std::vector<Ellipse>& ellipses, int supersample = 4);

/// Ten-ellipse Shepp-Logan head (Toft intensities) in [0, 1]. The two
/// off-axis pairs use mirrored shapes so the phantom is exactly symmetric
/// about the vertical axis.
std::vector<Ellipse> shepp_logan_ellipses();
Image shepp_logan(int image_side);

/// Head-like phantom with a skull ring and a seeded set of interior ellipses.
Image random_ellipse_phantom(int image_side, std::uint64_t seed);

/// Uniform disk of the given radius (fraction of the half-width) centred on the image.
Image disk_phantom(int image_side, double radius = 0.6);

}  // namespace dice
