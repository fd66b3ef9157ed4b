#include "adaptnav/nn/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "adaptnav/core/io.hpp"

namespace adaptnav::nn {
namespace {

constexpr char kMagic[4] = {'A', 'N', 'C', 'K'};

void append_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t read_u64_le(const std::string& s, size_t pos) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  return v;
}

void append_f32_le(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float read_f32_le(const std::string& s, size_t pos) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

nlohmann::json parse_manifest(const std::string& data, size_t* blob_start) {
  if (data.size() < 12 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  uint64_t mlen = read_u64_le(data, 4);
  if (12 + mlen > data.size())
    throw std::runtime_error("checkpoint: truncated manifest");
  nlohmann::json manifest =
      nlohmann::json::parse(data.substr(12, static_cast<size_t>(mlen)));
  *blob_start = 12 + static_cast<size_t>(mlen);
  return manifest;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& meta) {
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : store.tensors()) {
    tensors.push_back({{"name", name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"dtype", "f32le"},
                       {"offset", offset}});
    offset += static_cast<uint64_t>(t.value.size()) * 4;
  }
  nlohmann::json manifest = {{"format", "adaptnav-checkpoint"},
                             {"version", 1},
                             {"tensors", tensors},
                             {"meta", meta}};
  std::string mstr = manifest.dump();
  std::string out;
  out.reserve(12 + mstr.size() + offset);
  out.append(kMagic, 4);
  append_u64_le(out, mstr.size());
  out += mstr;
  for (const auto& [name, t] : store.tensors()) {
    // Row-major element order so the blob layout is independent of the
    // matrix library's internal storage.
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c)
        append_f32_le(out, static_cast<float>(t.value(r, c)));
  }
  atomic_write_file(path, out);
}

nlohmann::json load_checkpoint(const std::string& path, ParamStore& store) {
  std::string data = read_file(path);
  size_t blob_start = 0;
  nlohmann::json manifest = parse_manifest(data, &blob_start);
  for (const auto& entry : manifest.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    auto shape = entry.at("shape");
    Eigen::Index rows = shape.at(0).get<Eigen::Index>();
    Eigen::Index cols = shape.at(1).get<Eigen::Index>();
    if (entry.at("dtype").get<std::string>() != "f32le")
      throw std::runtime_error("checkpoint: unsupported dtype for " + name);
    size_t off = blob_start + entry.at("offset").get<uint64_t>();
    size_t need = static_cast<size_t>(rows) * static_cast<size_t>(cols) * 4;
    if (off + need > data.size())
      throw std::runtime_error("checkpoint: truncated blob at " + name);
    Mat value(rows, cols);
    size_t p = off;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, p += 4)
        value(r, c) = static_cast<double>(read_f32_le(data, p));
    if (store.has(name)) {
      Tensor& t = store.get(name);
      if (t.value.rows() != rows || t.value.cols() != cols)
        throw std::runtime_error("checkpoint: shape mismatch for " + name);
      t.value = std::move(value);
      t.grad.setZero();
      t.m.setZero();
      t.v.setZero();
    } else {
      store.create(name, std::move(value));
    }
  }
  return manifest.value("meta", nlohmann::json::object());
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
  std::string data = read_file(path);
  size_t blob_start = 0;
  nlohmann::json manifest = parse_manifest(data, &blob_start);
  return manifest.value("meta", nlohmann::json::object());
}

}  // namespace adaptnav::nn
