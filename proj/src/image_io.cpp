#include "trgan/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace trgan::io {

namespace {

cv::Mat load(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot open image: " + path.string());
  cv::Mat m = cv::imread(path.string(), flags);
  if (m.empty()) throw IoError("cannot decode image: " + path.string());
  return m;
}

void save(const std::filesystem::path& path, const cv::Mat& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw IoError("cannot write image: " + path.string());
}

}  // namespace

Tensor<float> read_image(const std::filesystem::path& path) {
  cv::Mat m = load(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_ANYCOLOR);
  double scale = 1.0;
  switch (m.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F: scale = 1.0; break;
    default: throw IoError("unsupported pixel depth: " + path.string());
  }
  if (m.channels() == 1) {
    cv::cvtColor(m, m, cv::COLOR_GRAY2BGR);
  } else if (m.channels() == 4) {
    cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  }
  cv::Mat f;
  m.convertTo(f, CV_32FC3, scale);
  const auto h = static_cast<std::size_t>(f.rows);
  const auto w = static_cast<std::size_t>(f.cols);
  Tensor<float> out(1, 3, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = f.ptr<cv::Vec3f>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      // OpenCV stores BGR.
      out(0, 0, y, x) = std::clamp(row[x][2], 0.0f, 1.0f);
      out(0, 1, y, x) = std::clamp(row[x][1], 0.0f, 1.0f);
      out(0, 2, y, x) = std::clamp(row[x][0], 0.0f, 1.0f);
    }
  }
  return out;
}

Rgb8 read_rgb8(const std::filesystem::path& path) {
  cv::Mat m = load(path, cv::IMREAD_COLOR);
  Rgb8 img;
  img.h = static_cast<std::size_t>(m.rows);
  img.w = static_cast<std::size_t>(m.cols);
  img.rgb.resize(img.h * img.w * 3);
  for (std::size_t y = 0; y < img.h; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < img.w; ++x) {
      std::uint8_t* px = &img.rgb[(y * img.w + x) * 3];
      px[0] = row[x][2];
      px[1] = row[x][1];
      px[2] = row[x][0];
    }
  }
  return img;
}

std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, std::size_t& h, std::size_t& w) {
  cv::Mat m = load(path, cv::IMREAD_GRAYSCALE);
  h = static_cast<std::size_t>(m.rows);
  w = static_cast<std::size_t>(m.cols);
  std::vector<std::uint8_t> out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    std::copy_n(m.ptr<std::uint8_t>(static_cast<int>(y)), w, out.begin() + static_cast<std::ptrdiff_t>(y * w));
  return out;
}

void write_rgb8(const std::filesystem::path& path, const Rgb8& img) {
  cv::Mat m(static_cast<int>(img.h), static_cast<int>(img.w), CV_8UC3);
  for (std::size_t y = 0; y < img.h; ++y) {
    auto* row = m.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < img.w; ++x) {
      const std::uint8_t* px = &img.rgb[(y * img.w + x) * 3];
      row[x] = cv::Vec3b(px[2], px[1], px[0]);
    }
  }
  save(path, m);
}

void write_image(const std::filesystem::path& path, const Tensor<float>& img) {
  Rgb8 out;
  out.h = img.h();
  out.w = img.w();
  out.rgb.resize(out.h * out.w * 3);
  for (std::size_t y = 0; y < out.h; ++y)
    for (std::size_t x = 0; x < out.w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(img(0, c, y, x), 0.0f, 1.0f);
        out.rgb[(y * out.w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  write_rgb8(path, out);
}

void write_gray16(const std::filesystem::path& path, std::size_t h, std::size_t w, const float* values) {
  cv::Mat m(static_cast<int>(h), static_cast<int>(w), CV_16UC1);
  for (std::size_t y = 0; y < h; ++y) {
    auto* row = m.ptr<std::uint16_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      const float v = std::clamp(values[y * w + x], 0.0f, 1.0f);
      row[x] = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
    }
  }
  save(path, m);
}

std::vector<float> read_gray16(const std::filesystem::path& path, std::size_t& h, std::size_t& w) {
  cv::Mat m = load(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  h = static_cast<std::size_t>(m.rows);
  w = static_cast<std::size_t>(m.cols);
  const double scale = m.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
  cv::Mat f;
  m.convertTo(f, CV_32F, scale);
  std::vector<float> out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    std::copy_n(f.ptr<float>(static_cast<int>(y)), w, out.begin() + static_cast<std::ptrdiff_t>(y * w));
  return out;
}

}  // namespace trgan::io
