#include "absvo/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "absvo/errors.hpp"

namespace absvo {

namespace {

void check_dims(int height, int width) {
  if (height < 0 || width < 0) throw DimensionMismatch("negative image dimensions");
}

}  // namespace

ImageBuffer::ImageBuffer(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width);
  if (channels != 1 && channels != 3) throw UnsupportedFormat("images must have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageBuffer::ImageBuffer(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_dims(height, width);
  if (channels != 1 && channels != 3) throw UnsupportedFormat("images must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels)
    throw DimensionMismatch("image data length does not match H*W*C");
}

void ImageBuffer::validate() const {
  for (double v : data_)
    if (!std::isfinite(v)) throw InputError("image contains a non-finite value");
}

ScalarMap::ScalarMap(int height, int width, double fill) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

ScalarMap::ScalarMap(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != static_cast<std::size_t>(height) * width)
    throw DimensionMismatch("map data length does not match H*W");
}

ImageBuffer ScalarMap::as_image() const {
  return ImageBuffer(height_, width_, 1, std::vector<double>(data_.begin(), data_.end()));
}

void DepthMap::validate() const {
  for (double v : values())
    if (!(v > 0.0) || !std::isfinite(v))
      throw NonPositiveDepth("depth map entries must be positive and finite");
}

void DisparityMap::validate() const {
  for (double v : values())
    if (!(v >= 0.0) || !std::isfinite(v))
      throw NonPositiveDisparity("disparity map entries must be non-negative and finite");
}

std::size_t count_valid(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

CoordinateMap::CoordinateMap(int h, int w)
    : height(h), width(w),
      x(static_cast<std::size_t>(h) * w, 0.0),
      y(static_cast<std::size_t>(h) * w, 0.0),
      valid(static_cast<std::size_t>(h) * w, 0) {}

CoordinateMap CoordinateMap::identity(int h, int w) {
  CoordinateMap map(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      map.x[i] = c;
      map.y[i] = r;
      map.valid[i] = 1;
    }
  return map;
}

}  // namespace absvo
