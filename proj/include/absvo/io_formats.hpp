#pragma once

#include <string>
#include <vector>

#include "absvo/evaluation.hpp"
#include "absvo/image.hpp"

namespace absvo {

/// Rotations further than this from orthonormal are re-orthonormalized with
/// a warning; beyond kRotationRejectTolerance the line is rejected.
inline constexpr double kRotationTolerance = 1e-6;
inline constexpr double kRotationRejectTolerance = 1e-2;

/// One pose per line: 12 numbers, row-major 3x4 [R | t], camera-to-world.
/// Blank lines are skipped. Throws ParseError (with line), MalformedRotation.
Trajectory read_poses(const std::string& path, std::vector<std::string>* warnings = nullptr);
Trajectory parse_poses(const std::string& text, std::vector<std::string>* warnings = nullptr);

/// 17 significant digits per value.
void write_poses(const Trajectory& traj, const std::string& path);
std::string format_poses(const Trajectory& traj);

/// Binary PGM (P5, 1 channel) or PPM (P6, 3 channels), maxval 1..65535.
/// Values are divided by maxval. Throws ParseError, UnsupportedFormat.
ImageBuffer read_image(const std::string& path);
ImageBuffer decode_image(const std::string& bytes);

/// Values are clamped to [0, 1] and rounded to maxval steps (255 or 65535).
void write_image(const ImageBuffer& image, const std::string& path, int maxval = 255);
std::string encode_image(const ImageBuffer& image, int maxval = 255);

/// Grayscale PFM ("Pf"), float32. Writes little-endian, reads either byte
/// order; rows are stored bottom to top. No positivity check on read.
DepthMap read_depth(const std::string& path);
DepthMap decode_pfm(const std::string& bytes);

void write_depth(const ScalarMap& depth, const std::string& path);
std::string encode_pfm(const ScalarMap& depth);

/// Whole-file helpers. read_file throws InputError when the file is missing.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace absvo
