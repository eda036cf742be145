#pragma once

#include <cstddef>
#include <span>

#include "dice/linalg.hpp"

namespace dice {

/// Square grayscale image stored row-major, row 0 at the top.
class Image {
 public:
  Image() = default;
  explicit Image(int side, double fill = 0.0);
  Image(int side, Vec pixels);

  int side() const { return side_; }
  std::size_t size() const { return pixels_.size(); }

  double& operator()(int row, int col) { return pixels_[static_cast<std::size_t>(row) * side_ + col]; }
  double operator()(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * side_ + col]; }

  const Vec& pixels() const { return pixels_; }
  Vec& pixels() { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int side_ = 0;
  Vec pixels_;
};

/// Line integrals laid out angle-major, detector-minor.
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(int n_angles, int n_detectors, double fill = 0.0);
  Sinogram(int n_angles, int n_detectors, Vec values);

  int n_angles() const { return n_angles_; }
  int n_detectors() const { return n_detectors_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int angle, int det) { return values_[static_cast<std::size_t>(angle) * n_detectors_ + det]; }
  double operator()(int angle, int det) const {
    return values_[static_cast<std::size_t>(angle) * n_detectors_ + det];
  }

  const Vec& values() const { return values_; }
  Vec& values() { return values_; }

  std::span<const double> row(int angle) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(angle) * n_detectors_, n_detectors_);
  }

  bool operator==(const Sinogram&) const = default;

 private:
  int n_angles_ = 0;
  int n_detectors_ = 0;
  Vec values_;
};

}  // namespace dice
