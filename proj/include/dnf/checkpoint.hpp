#pragma once

// Portable checkpoint container: u64-LE header length, JSON header, raw f32-LE
// payload. Readable by safetensors loaders.

#include <filesystem>
#include <string>
#include <string_view>

#include "dnf/tensor.hpp"

namespace dnf {

/// Tensors are laid out in name order; the header is space-padded to a
/// multiple of 8 bytes. Throws ShapeMismatch on inconsistent tensors.
std::string encode_checkpoint(const NamedTensorSet& tensors);

/// Throws FormatError on anything but well-formed F32 content.
NamedTensorSet decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const NamedTensorSet& tensors);
NamedTensorSet read_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dnf
