#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace adaptnav {

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

// Vectors cross file boundaries as base64 of little-endian f32.
std::string encode_f32le(const Eigen::VectorXd& v);
Eigen::VectorXd decode_f32le(const std::string& text);

}  // namespace adaptnav
