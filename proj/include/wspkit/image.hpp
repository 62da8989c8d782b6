#pragma once

#include <array>

#include "wspkit/tensor.hpp"

namespace wspkit {

// Maps crop-frame point coordinates into letterboxed network-input
// coordinates: out = in * scale + offset.
struct LetterboxTransform {
  double scale = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;

  std::array<double, 2> apply(const std::array<double, 2>& xy) const {
    return {xy[0] * scale + offset_x, xy[1] * scale + offset_y};
  }
};

// Integer-aligned sub-image copy; box is (x, y, w, h) in whole pixels and
// must lie inside the image.
Tensor crop_image(const Tensor& image, const std::array<int, 4>& box);

// Pads the crop to a square and resizes to out_size x out_size with bilinear
// sampling (zero outside the crop content). The transform maps crop-frame
// coordinates to the letterboxed frame.
std::pair<Tensor, LetterboxTransform> letterbox(const Tensor& crop, int out_size);

}  // namespace wspkit
