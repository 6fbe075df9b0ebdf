#include "spanel/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spanel/error.hpp"

namespace spanel {

namespace {

constexpr const char* kModule = "image-io";

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::kParse, kModule, message); }

// Reads the ASCII header of a binary netpbm file: magic, width, height, maxval.
struct NetpbmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader read_netpbm_header(std::string_view bytes, std::string_view magic) {
  if (bytes.substr(0, 2) != magic) bad("expected " + std::string(magic) + " netpbm data");
  std::size_t pos = 2;
  auto next_int = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) bad("malformed netpbm header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 20) bad("netpbm dimension too large");
    }
    return static_cast<int>(v);
  };
  NetpbmHeader h;
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) bad("malformed netpbm header");
  h.data_offset = pos + 1;
  if (h.width <= 0 || h.height <= 0) bad("netpbm dimensions must be positive");
  if (h.maxval <= 0 || h.maxval > 255) bad("only 8-bit netpbm is supported");
  return h;
}

}  // namespace

BinaryGrid decode_pgm_mask(std::string_view bytes) {
  const NetpbmHeader h = read_netpbm_header(bytes, "P5");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() < h.data_offset + n) bad("truncated PGM data");
  BinaryGrid grid(h.height, h.width, 0);
  for (std::size_t i = 0; i < n; ++i) grid.data[i] = bytes[h.data_offset + i] != 0 ? 1 : 0;
  return grid;
}

std::string encode_pgm(const BinaryGrid& mask) {
  std::string out = "P5\n" + std::to_string(mask.cols) + " " + std::to_string(mask.rows) + "\n255\n";
  for (auto v : mask.data) out.push_back(v ? static_cast<char>(255) : '\0');
  return out;
}

RgbImage decode_ppm(std::string_view bytes) {
  const NetpbmHeader h = read_netpbm_header(bytes, "P6");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() < h.data_offset + 3 * n) bad("truncated PPM data");
  RgbImage img(h.width, h.height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) img.pixels[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
  return img;
}

std::string encode_ppm(const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const auto& px : image.pixels) {
    out.push_back(static_cast<char>(px.r));
    out.push_back(static_cast<char>(px.g));
    out.push_back(static_cast<char>(px.b));
  }
  return out;
}

std::string encode_png(const RgbImage& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  static_assert(sizeof(Rgb) == 3);
  const auto* buffer = reinterpret_cast<const png_byte*>(image.pixels.data());
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorCode::kIo, kModule, std::string("png: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorCode::kIo, kModule, std::string("png: ") + png.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode_png(std::string_view bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    bad(std::string("png: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    bad(std::string("png: ") + png.message);
  }
  return img;
}

RgbImage decode_image(std::string_view bytes) {
  if (bytes.substr(0, 2) == "P6") return decode_ppm(bytes);
  return decode_png(bytes);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path + "'", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, kModule, "cannot write '" + path + "'", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, kModule, "short write to '" + path + "'", path);
}

}  // namespace spanel
