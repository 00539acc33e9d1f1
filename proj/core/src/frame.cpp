#include "qtmtt/frame.hpp"

#include <algorithm>

#include "qtmtt/errors.hpp"

namespace qtmtt {

Frame pad_to_multiple(const Frame& f, int block) {
  if (block <= 0) throw ConfigError("pad block must be positive");
  if (f.width() <= 0 || f.height() <= 0) throw ConfigError("cannot pad an empty frame");
  auto round_up = [block](int v) { return (v + block - 1) / block * block; };
  const int pw = round_up(f.width());
  const int ph = round_up(f.height());
  if (pw == f.width() && ph == f.height()) return f;

  Frame out;
  out.luma = Grid<uint8_t>(pw, ph);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, f.height() - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, f.width() - 1);
      out.luma.at(x, y) = f.luma.at(sx, sy);
    }
  }
  return out;
}

double region_mse(const Grid<uint8_t>& a, const Grid<uint8_t>& b, int width, int height) {
  uint64_t sse = 0;
  for (int y = 0; y < height; ++y) {
    const uint8_t* ra = a.row(y);
    const uint8_t* rb = b.row(y);
    for (int x = 0; x < width; ++x) {
      const int d = int(ra[x]) - int(rb[x]);
      sse += uint64_t(d * d);
    }
  }
  return double(sse) / (double(width) * double(height));
}

}  // namespace qtmtt
