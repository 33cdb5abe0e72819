#pragma once

#include <filesystem>
#include <string>

#include "elasto/rf_frame.hpp"

namespace elasto {

/// RFF1 layout: one ASCII header line
///   "RFF1 <n_lines> <n_samples> <fs_hz> <c_mps> <pitch_mm> <f0_hz>\n"
/// followed by n_lines * n_samples little-endian IEEE-754 float32 values,
/// line-major.
std::string encode_rff(const RFFrame& frame);

/// Throws ParseError (with the byte offset) on a bad magic, malformed or
/// non-positive header field, payload length mismatch or non-finite sample.
RFFrame decode_rff(const std::string& bytes);

void write_rff(const RFFrame& frame, const std::filesystem::path& path);
RFFrame read_rff(const std::filesystem::path& path);

}  // namespace elasto
