#include "dnf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "dnf/common.hpp"

namespace dnf {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::size_t kAlign = 8;

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64_le(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[i]);
  return v;
}

void put_f32_le(char* dst, const float* src, std::size_t n) {
  std::memcpy(dst, src, n * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < n; ++i) std::reverse(dst + 4 * i, dst + 4 * i + 4);
  }
}

void get_f32_le(float* dst, const char* src, std::size_t n) {
  std::memcpy(dst, src, n * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<char*>(dst);
    for (std::size_t i = 0; i < n; ++i) std::reverse(bytes + 4 * i, bytes + 4 * i + 4);
  }
}

[[noreturn]] void bad(const std::string& msg) {
  throw Error(ErrorCode::FormatError, "checkpoint: " + msg);
}

}  // namespace

std::uint64_t Tensor::numel() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape && a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), sizeof(float) * a.data.size()) == 0;
}

bool bit_equal(const NamedTensorSet& a, const NamedTensorSet& b) {
  if (a.size() != b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
    return x.first == y.first && bit_equal(x.second, y.second);
  });
}

void check_compatible(const NamedTensorSet& a, const NamedTensorSet& b) {
  for (const auto& [name, t] : a) {
    auto it = b.find(name);
    if (it == b.end()) throw Error(ErrorCode::MissingTensor, "tensor '" + name + "' missing");
    if (it->second.shape != t.shape) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' differs in shape");
    }
  }
  for (const auto& [name, t] : b) {
    if (!a.count(name)) throw Error(ErrorCode::MissingTensor, "tensor '" + name + "' missing");
  }
}

std::string encode_checkpoint(const NamedTensorSet& tensors) {
  ojson header = ojson::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    if (!t.consistent()) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' shape does not match data");
    }
    if (name == "__metadata__") bad("reserved tensor name");
    const std::uint64_t bytes = sizeof(float) * static_cast<std::uint64_t>(t.data.size());
    ojson entry;
    entry["dtype"] = "F32";
    entry["shape"] = t.shape;
    entry["data_offsets"] = {offset, offset + bytes};
    header[name] = std::move(entry);
    offset += bytes;
  }
  auto text = header.dump();
  text.append((kAlign - text.size() % kAlign) % kAlign, ' ');

  std::string out;
  out.reserve(8 + text.size() + offset);
  put_u64_le(out, text.size());
  out += text;
  const auto payload_start = out.size();
  out.resize(payload_start + offset);
  std::size_t pos = payload_start;
  for (const auto& [name, t] : tensors) {
    put_f32_le(out.data() + pos, t.data.data(), static_cast<std::size_t>(t.data.size()));
    pos += sizeof(float) * static_cast<std::size_t>(t.data.size());
  }
  return out;
}

NamedTensorSet decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 8) bad("shorter than the length prefix");
  const auto n = get_u64_le(bytes);
  if (n > bytes.size() - 8) bad("header length exceeds file size");
  const auto payload = bytes.substr(8 + n);

  ojson header;
  try {
    header = ojson::parse(bytes.substr(8, n));
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("header is not JSON: ") + e.what());
  }
  if (!header.is_object()) bad("header is not an object");

  NamedTensorSet out;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") continue;
    try {
      if (entry.at("dtype").get<std::string>() != "F32") bad("unsupported dtype for '" + name + "'");
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::uint64_t>>();
      const auto& offs = entry.at("data_offsets");
      if (!offs.is_array() || offs.size() != 2) bad("bad data_offsets for '" + name + "'");
      const auto b = offs[0].get<std::uint64_t>();
      const auto e = offs[1].get<std::uint64_t>();
      if (b > e || e > payload.size()) bad("data_offsets out of range for '" + name + "'");
      std::uint64_t numel = 1;
      for (auto d : t.shape) {
        if (d != 0 && numel > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
          bad("shape overflow for '" + name + "'");
        }
        numel *= d;
      }
      if (numel * sizeof(float) != e - b) bad("size of '" + name + "' disagrees with shape");
      t.data.resize(static_cast<Eigen::Index>(numel));
      get_f32_le(t.data.data(), payload.data() + b, static_cast<std::size_t>(numel));
      ranges.emplace_back(b, e);
      out.emplace(name, std::move(t));
    } catch (const nlohmann::json::exception& e) {
      bad("bad entry '" + name + "': " + e.what());
    }
  }
  std::sort(ranges.begin(), ranges.end());
  std::uint64_t covered = 0;
  for (const auto& [b, e] : ranges) {
    if (b != covered) bad("payload has gaps or overlapping tensors");
    covered = e;
  }
  if (covered != payload.size()) bad("trailing bytes after the last tensor");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_checkpoint(const std::filesystem::path& path, const NamedTensorSet& tensors) {
  write_file(path, encode_checkpoint(tensors));
}

NamedTensorSet read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace dnf
