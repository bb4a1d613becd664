#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace absvo {

/// H x W x C image, row-major with interleaved channels. Values are nominally
/// in [0, 1]; all arithmetic is double precision.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, double fill = 0.0);
  ImageBuffer(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }

  double& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  double at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Throws if any value is non-finite.
  void validate() const;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// Single-channel H x W field.
class ScalarMap {
 public:
  ScalarMap() = default;
  ScalarMap(int height, int width, double fill = 0.0);
  ScalarMap(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  double operator()(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  template <typename Other>
  bool same_shape(const Other& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  /// Single-channel image view of the same values.
  ImageBuffer as_image() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Depth along the optical axis, meters. Entries must be positive.
class DepthMap : public ScalarMap {
 public:
  using ScalarMap::ScalarMap;
  void validate() const;
};

/// Horizontal disparity in pixels. Entries must be non-negative.
class DisparityMap : public ScalarMap {
 public:
  using ScalarMap::ScalarMap;
  void validate() const;
};

using Mask = std::vector<std::uint8_t>;

std::size_t count_valid(const Mask& mask);

/// Per-pixel sampling positions into a source image plus validity.
struct CoordinateMap {
  int height = 0;
  int width = 0;
  std::vector<double> x;  // column
  std::vector<double> y;  // row
  Mask valid;

  CoordinateMap() = default;
  CoordinateMap(int h, int w);

  static CoordinateMap identity(int h, int w);
  std::size_t size() const { return x.size(); }
};

/// d(sample)/dx and d(sample)/dy for each output pixel and channel.
struct SampleJacobian {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> d_dx;
  std::vector<double> d_dy;
};

}  // namespace absvo
