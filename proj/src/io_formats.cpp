#include "absvo/io_formats.hpp"

#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "absvo/errors.hpp"

namespace absvo {

namespace {

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size() && errno != ERANGE && std::isfinite(out);
}

Mat3 nearest_rotation(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
  return svd.matrixU() * s * svd.matrixV().transpose();
}

// Netpbm-style header reader: whitespace-separated tokens, '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  long integer(const char* what) {
    const std::string t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || v <= 0)
      throw ParseError(std::string("invalid ") + what + " '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  std::size_t data_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw ParseError("missing separator after header");
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

constexpr long kMaxDimension = 1 << 15;

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for '" + path + "'");
}

Trajectory parse_poses(const std::string& text, std::vector<std::string>* warnings) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    if (tokens.size() != 12)
      throw ParseError("expected 12 values, found " + std::to_string(tokens.size()), line_no);
    double v[12];
    for (int i = 0; i < 12; ++i)
      if (!parse_double(tokens[i], v[i]))
        throw ParseError("invalid number '" + tokens[i] + "'", line_no);

    RigidTransform pose;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = v[4 * r + c];
      pose.translation(r) = v[4 * r + 3];
    }
    const double err = pose.orthonormality_error();
    if (err > kRotationRejectTolerance || pose.rotation.determinant() <= 0.0)
      throw MalformedRotation("rotation is not orthonormal (error " + std::to_string(err) +
                              ", line " + std::to_string(line_no) + ")");
    if (err > kRotationTolerance) {
      pose.rotation = nearest_rotation(pose.rotation);
      if (warnings)
        warnings->push_back("line " + std::to_string(line_no) +
                            ": rotation re-orthonormalized (error " + std::to_string(err) + ")");
    }
    traj.poses.push_back(pose);
    traj.frame_indices.push_back(static_cast<int>(traj.poses.size()) - 1);
  }
  return traj;
}

Trajectory read_poses(const std::string& path, std::vector<std::string>* warnings) {
  return parse_poses(read_file(path), warnings);
}

std::string format_poses(const Trajectory& traj) {
  std::string out;
  char buf[32];
  for (const auto& p : traj.poses) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) {
        const double v = c < 3 ? p.rotation(r, c) : p.translation(r);
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (r > 0 || c > 0) out += ' ';
        out += buf;
      }
    out += '\n';
  }
  return out;
}

void write_poses(const Trajectory& traj, const std::string& path) {
  write_file(path, format_poses(traj));
}

ImageBuffer decode_image(const std::string& bytes) {
  HeaderReader header(bytes);
  const std::string magic = header.token();
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw UnsupportedFormat("unsupported image type '" + magic + "' (expected P5 or P6)");
  }
  const long width = header.integer("width");
  const long height = header.integer("height");
  const long maxval = header.integer("maxval");
  if (width > kMaxDimension || height > kMaxDimension) throw ParseError("image too large");
  if (maxval > 65535) throw ParseError("maxval exceeds 65535");
  const std::size_t start = header.data_start();

  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - start < count * bytes_per) throw ParseError("truncated pixel data");

  std::vector<double> data(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 2 ? (unsigned{p[2 * i]} << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(maxval)) throw ParseError("sample exceeds maxval");
    data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return ImageBuffer(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

ImageBuffer read_image(const std::string& path) { return decode_image(read_file(path)); }

std::string encode_image(const ImageBuffer& image, int maxval) {
  if (maxval != 255 && maxval != 65535) throw UnsupportedFormat("maxval must be 255 or 65535");
  std::string out = (image.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) +
                    " " + std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";
  for (double v : image.values()) {
    const double c = std::isfinite(v) ? std::min(std::max(v, 0.0), 1.0) : 0.0;
    const auto q = static_cast<unsigned>(std::lround(c * maxval));
    if (maxval > 255) out += static_cast<char>(q >> 8);
    out += static_cast<char>(q & 0xFF);
  }
  return out;
}

void write_image(const ImageBuffer& image, const std::string& path, int maxval) {
  write_file(path, encode_image(image, maxval));
}

DepthMap decode_pfm(const std::string& bytes) {
  HeaderReader header(bytes);
  const std::string magic = header.token();
  if (magic == "PF") throw UnsupportedFormat("colour PFM is not a depth map");
  if (magic != "Pf") throw UnsupportedFormat("unsupported depth format '" + magic + "'");
  const long width = header.integer("width");
  const long height = header.integer("height");
  if (width > kMaxDimension || height > kMaxDimension) throw ParseError("image too large");
  const std::string scale_tok = header.token();
  double scale = 0.0;
  if (!parse_double(scale_tok, scale) || scale == 0.0)
    throw ParseError("invalid PFM scale '" + scale_tok + "'");
  const bool little = scale < 0.0;
  const std::size_t start = header.data_start();

  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - start < count * 4) throw ParseError("truncated PFM data");

  const bool swap = little != (std::endian::native == std::endian::little);
  DepthMap depth(static_cast<int>(height), static_cast<int>(width));
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      const std::size_t off = start + 4 * (static_cast<std::size_t>(height - 1 - r) * width + c);
      std::uint32_t u;
      std::memcpy(&u, bytes.data() + off, 4);
      if (swap) u = __builtin_bswap32(u);
      depth(static_cast<int>(r), static_cast<int>(c)) = std::bit_cast<float>(u);
    }
  return depth;
}

DepthMap read_depth(const std::string& path) { return decode_pfm(read_file(path)); }

std::string encode_pfm(const ScalarMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " +
                    std::to_string(depth.height()) + "\n-1.0\n";
  const std::size_t start = out.size();
  out.resize(start + 4 * depth.size());
  const bool swap = std::endian::native != std::endian::little;
  for (int r = 0; r < depth.height(); ++r)
    for (int c = 0; c < depth.width(); ++c) {
      std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(depth(r, c)));
      if (swap) u = __builtin_bswap32(u);
      const std::size_t off =
          start + 4 * (static_cast<std::size_t>(depth.height() - 1 - r) * depth.width() + c);
      std::memcpy(out.data() + off, &u, 4);
    }
  return out;
}

void write_depth(const ScalarMap& depth, const std::string& path) {
  write_file(path, encode_pfm(depth));
}

}  // namespace absvo
