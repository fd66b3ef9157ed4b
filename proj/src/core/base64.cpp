#include "adaptnav/core/base64.hpp"

#include <cstring>
#include <stdexcept>

namespace adaptnav {

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace

std::string base64_encode(const uint8_t* data, size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= len; i += 3) {
    uint32_t v = (uint32_t(data[i]) << 16) | (uint32_t(data[i + 1]) << 8) | data[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  size_t rem = len - i;
  if (rem == 1) {
    uint32_t v = uint32_t(data[i]) << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rem == 2) {
    uint32_t v = (uint32_t(data[i]) << 16) | (uint32_t(data[i + 1]) << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw std::invalid_argument("base64: bad padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw std::invalid_argument("base64: data after padding");
      int d = decode_char(c);
      if (d < 0) throw std::invalid_argument("base64: bad character");
      v = (v << 6) | uint32_t(d);
    }
    out.push_back(uint8_t((v >> 16) & 0xff));
    if (pad < 2) out.push_back(uint8_t((v >> 8) & 0xff));
    if (pad < 1) out.push_back(uint8_t(v & 0xff));
  }
  return out;
}

std::string encode_f32le(const Eigen::VectorXd& v) {
  std::vector<uint8_t> bytes(v.size() * 4);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    float f = static_cast<float>(v[i]);
    uint32_t u;
    std::memcpy(&u, &f, 4);
    bytes[i * 4 + 0] = uint8_t(u & 0xff);
    bytes[i * 4 + 1] = uint8_t((u >> 8) & 0xff);
    bytes[i * 4 + 2] = uint8_t((u >> 16) & 0xff);
    bytes[i * 4 + 3] = uint8_t((u >> 24) & 0xff);
  }
  return base64_encode(bytes.data(), bytes.size());
}

Eigen::VectorXd decode_f32le(const std::string& text) {
  std::vector<uint8_t> bytes = base64_decode(text);
  if (bytes.size() % 4 != 0) throw std::invalid_argument("f32le payload not a multiple of 4 bytes");
  Eigen::VectorXd v(bytes.size() / 4);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    uint32_t u = uint32_t(bytes[i * 4]) | (uint32_t(bytes[i * 4 + 1]) << 8) |
                 (uint32_t(bytes[i * 4 + 2]) << 16) | (uint32_t(bytes[i * 4 + 3]) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    v[i] = f;
  }
  return v;
}

}  // namespace adaptnav
