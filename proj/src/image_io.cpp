#include "xvloc/image_io.hpp"

#include <cctype>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "xvloc/errors.hpp"

namespace xvloc {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(in.get()));
  }
  if (token.empty()) throw IoError("truncated PGM header: " + path.string());
  return token;
}

int parse_header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string token = next_token(in, path);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw IoError("bad PGM header field '" + token + "': " + path.string());
  }
}

}  // namespace

Gray8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  const std::string magic = next_token(in, path);
  if (magic != "P5" && magic != "P2") throw IoError("not a PGM file: " + path.string());
  const int width = parse_header_int(in, path);
  const int height = parse_header_int(in, path);
  const int maxval = parse_header_int(in, path);
  if (width <= 0 || height <= 0) throw IoError("bad PGM dimensions: " + path.string());
  if (maxval <= 0 || maxval > 255) throw IoError("only 8-bit PGM is supported: " + path.string());

  Gray8 image(height, width);
  if (magic == "P5") {
    // next_token consumed exactly one whitespace byte after maxval.
    in.read(reinterpret_cast<char*>(image.data()), static_cast<std::streamsize>(image.size()));
    if (in.gcount() != static_cast<std::streamsize>(image.size())) {
      throw IoError("truncated PGM raster: " + path.string());
    }
  } else {
    for (Eigen::Index i = 0; i < image.size(); ++i) {
      int value = -1;
      if (!(in >> value) || value < 0 || value > maxval) {
        throw IoError("bad PGM raster value: " + path.string());
      }
      image.data()[i] = static_cast<std::uint8_t>(value);
    }
  }
  return image;
}

void write_pgm(const std::filesystem::path& path, const Gray8& image) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Gray8 read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  }
  if (png.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) {
    png_image_free(&png);
    throw IoError("PNG must be 8-bit single-channel: " + path.string());
  }
  png.format = PNG_FORMAT_GRAY;
  Gray8 image(png.height, png.width);
  if (!png_image_finish_read(&png, nullptr, image.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + message);
  }
  return image;
}

Gray8 read_gray8(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace xvloc
