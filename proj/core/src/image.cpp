#include "bihm/image.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "bihm/errors.hpp"

namespace bihm {

std::string encode_pgm(std::span<const double> image, int width, int height) {
  if (width < 1 || height < 1 || static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != image.size()) {
    throw ShapeError("pgm: " + std::to_string(width) + "x" + std::to_string(height) + " does not match " +
                     std::to_string(image.size()) + " pixels");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (const double v : image) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("pgm: pixel values must lie in [0, 1]");
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5))));
  }
  return out;
}

void write_pgm(std::span<const double> image, int width, int height, const std::filesystem::path& path) {
  const std::string bytes = encode_pgm(image, width, height);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto token = [&]() {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
      if (ch == '#') {
        while (ch != EOF && ch != '\n') ch = in.get();
      } else if (!std::isspace(ch)) {
        break;
      }
      ch = in.get();
    }
    while (ch != EOF && !std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      ch = in.get();
    }
    return tok;
  };
  if (token() != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  try {
    img.width = std::stoi(token());
    img.height = std::stoi(token());
    if (std::stoi(token()) != 255) throw IoError(path.string() + ": only maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (img.width < 1 || img.height < 1) throw IoError(path.string() + ": bad PGM geometry");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw IoError(path.string() + ": truncated PGM");
  return img;
}

}  // namespace bihm
