#include "dice/image.hpp"

#include "dice/errors.hpp"

namespace dice {

Image::Image(int side, double fill) : side_(side), pixels_(static_cast<std::size_t>(side) * side, fill) {
  if (side < 0) throw ContractError("Image: negative side");
}

Image::Image(int side, Vec pixels) : side_(side), pixels_(std::move(pixels)) {
  require_same_size(static_cast<std::size_t>(side) * side, pixels_.size(), "Image pixels");
}

Sinogram::Sinogram(int n_angles, int n_detectors, double fill)
    : n_angles_(n_angles), n_detectors_(n_detectors), values_(static_cast<std::size_t>(n_angles) * n_detectors, fill) {
  if (n_angles < 0 || n_detectors < 0) throw ContractError("Sinogram: negative shape");
}

Sinogram::Sinogram(int n_angles, int n_detectors, Vec values)
    : n_angles_(n_angles), n_detectors_(n_detectors), values_(std::move(values)) {
  require_same_size(static_cast<std::size_t>(n_angles) * n_detectors, values_.size(), "Sinogram values");
}

}  // namespace dice
