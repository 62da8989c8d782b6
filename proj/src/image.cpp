#include "wspkit/image.hpp"

#include <algorithm>
#include <cmath>

#include "wspkit/errors.hpp"

namespace wspkit {

Tensor crop_image(const Tensor& image, const std::array<int, 4>& box) {
  const int H = static_cast<int>(image.extent(1)), W = static_cast<int>(image.extent(2));
  const auto [x, y, w, h] = box;
  if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > W || y + h > H)
    throw DataError("crop box outside image bounds");
  Tensor out({1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at3(0, r, c) = image.at3(0, y + r, x + c);
  return out;
}

std::pair<Tensor, LetterboxTransform> letterbox(const Tensor& crop, int out_size) {
  const int h = static_cast<int>(crop.extent(1)), w = static_cast<int>(crop.extent(2));
  const int side = std::max(w, h);
  LetterboxTransform t;
  t.scale = static_cast<double>(out_size) / side;
  t.offset_x = (out_size - w * t.scale) / 2.0;
  t.offset_y = (out_size - h * t.scale) / 2.0;

  Tensor out({1, static_cast<std::size_t>(out_size), static_cast<std::size_t>(out_size)});
  for (int oy = 0; oy < out_size; ++oy)
    for (int ox = 0; ox < out_size; ++ox) {
      // Pixel-center back-projection into the crop frame.
      const double sx = (ox + 0.5 - t.offset_x) / t.scale - 0.5;
      const double sy = (oy + 0.5 - t.offset_y) / t.scale - 0.5;
      if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) continue;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      auto sample = [&](int yy, int xx) {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
        return crop.at3(0, yy, xx);
      };
      out.at3(0, oy, ox) = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                           fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
    }
  return {std::move(out), t};
}

}  // namespace wspkit
