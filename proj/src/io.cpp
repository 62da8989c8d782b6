#include "wspkit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wspkit/errors.hpp"

namespace wspkit {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open file for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("rename failed: " + tmp.string() + " -> " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::string blob = read_file(path);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < blob.size()) {
    std::size_t end = blob.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(blob.substr(start));
      break;
    }
    lines.push_back(blob.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.extent(0) != 1)
    throw DataError("write_pgm expects a (1,H,W) tensor, got " + shape_string(image.shape()));
  const std::size_t h = image.extent(1), w = image.extent(2);
  std::ostringstream os;
  os << "P5\n" << w << " " << h << "\n255\n";
  std::string header = os.str();
  std::string bytes;
  bytes.reserve(header.size() + h * w);
  bytes += header;
  for (std::size_t i = 0; i < h * w; ++i) {
    double v = std::clamp(image[i], 0.0, 1.0);
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  atomic_write_file(path, bytes);
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  std::size_t w = 0, h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w == 0 || h == 0 || maxval != 255)
    throw DataError("unsupported PGM file: " + path.string());
  in.get();  // single whitespace byte after maxval
  std::size_t offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + w * h) throw DataError("truncated PGM file: " + path.string());
  Tensor img({1, h, w});
  for (std::size_t i = 0; i < w * h; ++i)
    img[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0;
  return img;
}

}  // namespace wspkit
