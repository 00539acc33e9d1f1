#pragma once

#include <span>
#include <string>
#include <vector>

#include "qtmtt/agent.hpp"
#include "qtmtt/frame.hpp"

namespace qtmtt {

// Binary 8-bit PGM (P5).  Throws IoError on anything else.
Frame read_pgm(const std::string& path);
void write_pgm(const Frame& f, const std::string& path);

// Headerless 8-bit planar luma of exactly width*height bytes.
Frame read_raw_luma(const std::string& path, int width, int height);

// Loads a PGM, or a raw plane when width/height are given (> 0).
Frame read_image(const std::string& path, int raw_width = 0, int raw_height = 0);

// Shortest decimal string that parses back to the same double (and the exact
// inverse).  Backbone of every byte-reproducible text format here.
std::string format_double(double v);
double parse_double(const std::string& s);

// Trajectory files: one JSON object per line, a header object first.
struct TrajectoryFileHeader {
  int version = 1;
  int state_dim = kStateDim;
  std::vector<int> qps;
  std::vector<int> mtt_caps;
  double epsilon = 1.0;
  uint64_t seed = 0;
};

std::string serialize_trajectory(const Trajectory& t);
Trajectory parse_trajectory(const std::string& line);

void write_trajectories(const std::string& path, const TrajectoryFileHeader& header,
                        std::span<const Trajectory> records);

struct TrajectoryFile {
  TrajectoryFileHeader header;
  std::vector<Trajectory> records;
};
// Throws IoError naming the offending line on parse failures or version or
// dimension mismatches.
TrajectoryFile read_trajectories(const std::string& path);

}  // namespace qtmtt
