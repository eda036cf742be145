#include "dice/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dice/errors.hpp"

namespace dice {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 8> kSinoMagic{'D', 'I', 'C', 'E', 'S', 'I', 'N', 'O'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const fs::path& path) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw IoError(path.string() + ": unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return in;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const fs::path& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw IoError(path.string() + ": truncated PGM header");
  return token;
}

int parse_header_int(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header field '" + token + "'");
  }
}

}  // namespace

Image read_pgm(const fs::path& path) {
  auto in = open_in(path);
  if (pgm_token(in, path) != "P5") throw IoError(path.string() + ": not a binary PGM (P5) file");
  const int width = parse_header_int(pgm_token(in, path), path);
  const int height = parse_header_int(pgm_token(in, path), path);
  const int maxval = parse_header_int(pgm_token(in, path), path);
  if (width <= 0 || height <= 0) throw IoError(path.string() + ": invalid PGM dimensions");
  if (width != height) throw IoError(path.string() + ": image is not square");
  if (maxval <= 0 || maxval > 65535) throw IoError(path.string() + ": invalid PGM maxval");

  Image img(width);
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (maxval < 256) {
    std::vector<unsigned char> raw(count);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count)))
      throw IoError(path.string() + ": truncated PGM pixel data");
    for (std::size_t i = 0; i < count; ++i) img.pixels()[i] = static_cast<double>(raw[i]) / maxval;
  } else {
    std::vector<unsigned char> raw(2 * count);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
      throw IoError(path.string() + ": truncated PGM pixel data");
    for (std::size_t i = 0; i < count; ++i)
      img.pixels()[i] = static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) / maxval;
  }
  return img;
}

void write_pgm(const fs::path& path, const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ContractError("write_pgm: bit_depth must be 8 or 16");
  const int maxval = bit_depth == 8 ? 255 : 65535;
  auto out = open_out(path);
  out << "P5\n" << img.side() << ' ' << img.side() << '\n' << maxval << '\n';
  for (double v : img.pixels()) {
    const double clamped = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    const auto q = static_cast<unsigned>(std::lround(clamped * maxval));
    if (bit_depth == 8) {
      out.put(static_cast<char>(q));
    } else {
      out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    }
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<fs::path> list_pgm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.empty()) throw IoError(dir.string() + ": no .pgm files found");
  return files;
}

std::vector<Image> load_image_dir(const fs::path& dir) {
  const auto files = list_pgm_files(dir);

  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) {
    Image img = read_pgm(f);
    if (!images.empty() && img.side() != images.front().side())
      throw IoError(f.string() + ": size " + std::to_string(img.side()) + " differs from " +
                    std::to_string(images.front().side()));
    images.push_back(std::move(img));
  }
  return images;
}

void write_sinogram(const fs::path& path, const Sinogram& sino) {
  auto out = open_out(path);
  out.write(kSinoMagic.data(), kSinoMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sino.n_angles()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sino.n_detectors()));
  put_le<std::uint64_t>(out, 0);
  for (double v : sino.values()) put_le<double>(out, v);
  if (!out) throw IoError(path.string() + ": write failed");
}

Sinogram read_sinogram(const fs::path& path) {
  auto in = open_in(path);
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSinoMagic)
    throw IoError(path.string() + ": bad sinogram magic");
  const auto n_angles = get_le<std::uint32_t>(in, path);
  const auto n_det = get_le<std::uint32_t>(in, path);
  get_le<std::uint64_t>(in, path);
  const std::size_t count = static_cast<std::size_t>(n_angles) * n_det;
  Vec values(count);
  for (auto& v : values) v = get_le<double>(in, path);
  if (in.peek() != EOF) throw IoError(path.string() + ": trailing bytes after sinogram data");
  return Sinogram(static_cast<int>(n_angles), static_cast<int>(n_det), std::move(values));
}

void write_raw_f64(const fs::path& path, std::span<const double> values) {
  auto out = open_out(path);
  for (double v : values) put_le<double>(out, v);
  if (!out) throw IoError(path.string() + ": write failed");
}

Vec read_raw_f64(const fs::path& path) {
  const auto bytes = fs::file_size(path);
  if (bytes % sizeof(double) != 0) throw IoError(path.string() + ": size is not a multiple of 8 bytes");
  auto in = open_in(path);
  Vec values(bytes / sizeof(double));
  for (auto& v : values) v = get_le<double>(in, path);
  return values;
}

}  // namespace dice
