#include "trgan/avmask.hpp"

#include <sstream>

namespace trgan {

std::size_t AVMask::vessel_count() const {
  std::size_t n = 0;
  const float* v = channel(kVessel);
  for (std::size_t i = 0; i < pixels(); ++i) n += v[i] >= 0.5f ? 1 : 0;
  return n;
}

std::optional<std::string> check_invariants(const AVMask& m) {
  const float* a = m.channel(AVMask::kArtery);
  const float* v = m.channel(AVMask::kVein);
  const float* s = m.channel(AVMask::kVessel);
  for (std::size_t i = 0; i < m.pixels(); ++i) {
    for (const float* ch : {a, v, s}) {
      if (!(ch[i] >= 0.0f && ch[i] <= 1.0f)) {
        std::ostringstream os;
        os << "value out of [0,1] at pixel " << i;
        return os.str();
      }
      if (m.kind == MaskKind::binary && ch[i] != 0.0f && ch[i] != 1.0f) {
        std::ostringstream os;
        os << "non-binary value at pixel " << i;
        return os.str();
      }
    }
    if (m.kind == MaskKind::binary && (a[i] == 1.0f || v[i] == 1.0f) && s[i] != 1.0f) {
      std::ostringstream os;
      os << "artery/vein pixel " << i << " outside vessel channel";
      return os.str();
    }
  }
  return std::nullopt;
}

std::vector<std::uint8_t> encode_color(const AVMask& m) {
  std::vector<std::uint8_t> rgb(m.pixels() * 3, 0);
  const float* a = m.channel(AVMask::kArtery);
  const float* v = m.channel(AVMask::kVein);
  const float* s = m.channel(AVMask::kVessel);
  for (std::size_t i = 0; i < m.pixels(); ++i) {
    const bool art = a[i] >= 0.5f;
    const bool vei = v[i] >= 0.5f;
    const bool ves = s[i] >= 0.5f || art || vei;
    std::uint8_t* px = &rgb[i * 3];
    if (art && vei) {
      px[1] = 255;
    } else if (art) {
      px[0] = 255;
    } else if (vei) {
      px[2] = 255;
    } else if (ves) {
      px[0] = px[1] = px[2] = 255;
    }
  }
  return rgb;
}

AVMask decode_color(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w) {
  if (rgb.size() != h * w * 3) throw ShapeError("decode_color: buffer size does not match H*W*3");
  AVMask m(h, w, MaskKind::binary);
  float* a = m.channel(AVMask::kArtery);
  float* v = m.channel(AVMask::kVein);
  float* s = m.channel(AVMask::kVessel);
  for (std::size_t i = 0; i < h * w; ++i) {
    const bool r = rgb[i * 3] > 127;
    const bool g = rgb[i * 3 + 1] > 127;
    const bool b = rgb[i * 3 + 2] > 127;
    if (!r && !g && !b) continue;
    s[i] = 1.0f;
    if (r && !g && !b) {
      a[i] = 1.0f;
    } else if (b && !r && !g) {
      v[i] = 1.0f;
    } else if (g && !r && !b) {
      a[i] = 1.0f;
      v[i] = 1.0f;
    }
    // Any other color (white included) is an uncertain vessel pixel.
  }
  return m;
}

}  // namespace trgan
