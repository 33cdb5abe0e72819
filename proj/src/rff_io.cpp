#include "elasto/rff_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>
#include <vector>

#include "elasto/errors.hpp"

namespace elasto {

namespace {

constexpr std::string_view kMagic = "RFF1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Splits the header line into whitespace-separated fields, remembering where
// each starts.
struct Field {
  std::string_view text;
  std::size_t offset;
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start});
  }
  return out;
}

std::size_t parse_count(const Field& f, const char* name) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (ec != std::errc() || ptr != f.text.data() + f.text.size() || v == 0)
    throw ParseError(std::string("RFF header: ") + name + " must be a positive integer, got '" + std::string(f.text) + "'",
                     f.offset);
  return v;
}

double parse_positive(const Field& f, const char* name) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.text.data(), f.text.data() + f.text.size(), v);
  if (ec != std::errc() || ptr != f.text.data() + f.text.size() || !std::isfinite(v) || !(v > 0))
    throw ParseError(std::string("RFF header: ") + name + " must be a positive number, got '" + std::string(f.text) + "'",
                     f.offset);
  return v;
}

}  // namespace

std::string encode_rff(const RFFrame& frame) {
  frame.validate();
  std::string out = std::string(kMagic) + ' ' + std::to_string(frame.n_lines) + ' ' + std::to_string(frame.n_samples) +
                    ' ' + format_double(frame.fs_hz) + ' ' + format_double(frame.c_mps) + ' ' +
                    format_double(frame.pitch_mm) + ' ' + format_double(frame.f0_hz) + '\n';
  out.reserve(out.size() + 4 * frame.samples.size());
  for (float v : frame.samples) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  return out;
}

RFFrame decode_rff(const std::string& bytes) {
  if (bytes.size() < kMagic.size() || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    const std::string seen = bytes.substr(0, std::min<std::size_t>(bytes.size(), kMagic.size()));
    throw ParseError("bad RFF magic '" + seen + "', expected 'RFF1'", 0);
  }
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos) throw ParseError("RFF header is not newline-terminated", bytes.size());

  const auto fields = split_fields(std::string_view(bytes).substr(0, eol));
  if (fields.size() != 7)
    throw ParseError("RFF header must have 7 fields, found " + std::to_string(fields.size()),
                     fields.size() < 7 ? eol : fields[7].offset);
  if (fields[0].text != kMagic) throw ParseError("bad RFF magic '" + std::string(fields[0].text) + "'", 0);

  RFFrame frame;
  frame.n_lines = parse_count(fields[1], "n_lines");
  frame.n_samples = parse_count(fields[2], "n_samples");
  frame.fs_hz = parse_positive(fields[3], "fs_hz");
  frame.c_mps = parse_positive(fields[4], "c_mps");
  frame.pitch_mm = parse_positive(fields[5], "pitch_mm");
  frame.f0_hz = parse_positive(fields[6], "f0_hz");

  const std::size_t payload_at = eol + 1;
  const std::size_t count = frame.n_lines * frame.n_samples;
  const std::size_t expected = 4 * count;
  const std::size_t actual = bytes.size() - payload_at;
  if (actual != expected)
    throw ParseError("RFF payload is " + std::to_string(actual) + " bytes, expected " + std::to_string(expected) + " (" +
                         std::to_string(frame.n_lines) + " x " + std::to_string(frame.n_samples) + " float32)",
                     bytes.size());

  frame.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = payload_at + 4 * i;
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) throw ParseError("non-finite RFF sample " + std::to_string(i), at);
    frame.samples[i] = v;
  }
  return frame;
}

void write_rff(const RFFrame& frame, const std::filesystem::path& path) {
  const std::string bytes = encode_rff(frame);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

RFFrame read_rff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_rff(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace elasto
