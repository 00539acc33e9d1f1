#include "qtmtt/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qtmtt/errors.hpp"

namespace qtmtt {

using nlohmann::json;

// ---------------------------------------------------------------------------
// images

Frame read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {  // comment runs to end of line
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok += char(ch);
    }
    if (tok.empty()) throw IoError(path + ": truncated pgm header");
    return tok;
  };

  if (next_token() != "P5") throw IoError(path + ": not a binary pgm (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw IoError(path + ": malformed pgm header");
  }
  if (w <= 0 || h <= 0) throw IoError(path + ": bad pgm dimensions");
  if (maxval != 255) throw IoError(path + ": only 8-bit pgm supported");

  Frame f;
  f.luma = Grid<uint8_t>(w, h);
  in.read(reinterpret_cast<char*>(f.luma.cells().data()), std::streamsize(f.luma.cells().size()));
  if (in.gcount() != std::streamsize(f.luma.cells().size()))
    throw IoError(path + ": truncated pgm pixel data");
  return f;
}

void write_pgm(const Frame& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << f.width() << " " << f.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.luma.cells().data()),
            std::streamsize(f.luma.cells().size()));
  if (!out) throw IoError("failed writing " + path);
}

Frame read_raw_luma(const std::string& path, int width, int height) {
  if (width <= 0 || height <= 0) throw ConfigError("raw input needs positive --width/--height");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Frame f;
  f.luma = Grid<uint8_t>(width, height);
  in.read(reinterpret_cast<char*>(f.luma.cells().data()), std::streamsize(f.luma.cells().size()));
  if (in.gcount() != std::streamsize(f.luma.cells().size()))
    throw IoError(path + ": file smaller than width*height (wrong geometry?)");
  return f;
}

Frame read_image(const std::string& path, int raw_width, int raw_height) {
  if (raw_width > 0 || raw_height > 0) return read_raw_luma(path, raw_width, raw_height);
  return read_pgm(path);
}

// ---------------------------------------------------------------------------
// numbers

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IoError("not a number: '" + s + "'");
  return v;
}

// ---------------------------------------------------------------------------
// trajectory files (one json record per line)

namespace {

json state_to_json(const StateVector& s) {
  json a = json::array();
  for (double v : s) a.push_back(v);
  return a;
}

StateVector state_from_json(const json& a) {
  if (!a.is_array() || a.size() != kStateDim)
    throw IoError("state array must have " + std::to_string(kStateDim) + " entries");
  StateVector s;
  for (size_t i = 0; i < kStateDim; ++i) s[i] = a[i].get<double>();
  return s;
}

}  // namespace

std::string serialize_trajectory(const Trajectory& t) {
  json j;
  j["v"] = 1;
  j["frame"] = t.frame_id;
  j["qp"] = t.qp;
  j["cap"] = t.mtt_cap;
  j["root"] = {{"x", t.root.x},
               {"y", t.root.y},
               {"w", t.root.width},
               {"h", t.root.height},
               {"qtd", t.root.qt_depth},
               {"mttd", t.root.mtt_depth},
               {"mtt", t.root.in_mtt_region}};
  j["state"] = state_to_json(t.root_state);
  json gt = json::array();
  for (const auto& g : t.root_gt) {
    if (g.has_value())
      gt.push_back(*g);
    else
      gt.push_back(nullptr);
  }
  j["gt"] = gt;
  json actions = json::array();
  for (const ActionRecord& a : t.actions) {
    json ja;
    ja["a"] = index_of(a.action);
    ja["delta"] = a.delta_split_cost;
    ja["opt"] = a.optimal;
    json subs = json::array();
    for (const SubRecord& s : a.subs) {
      json js;
      js["state"] = state_to_json(s.state);
      js["gt"] = s.gt_cost;
      subs.push_back(std::move(js));
    }
    ja["subs"] = std::move(subs);
    actions.push_back(std::move(ja));
  }
  j["actions"] = std::move(actions);
  return j.dump();
}

Trajectory parse_trajectory(const std::string& line) {
  try {
    const json j = json::parse(line);
    const int version = j.at("v").get<int>();
    if (version != 1) throw IoError("unsupported record version " + std::to_string(version));
    Trajectory t;
    t.frame_id = j.at("frame").get<std::string>();
    t.qp = j.at("qp").get<int>();
    t.mtt_cap = j.at("cap").get<int>();
    const json& r = j.at("root");
    t.root.x = r.at("x").get<int>();
    t.root.y = r.at("y").get<int>();
    t.root.width = r.at("w").get<int>();
    t.root.height = r.at("h").get<int>();
    t.root.qt_depth = r.at("qtd").get<int>();
    t.root.mtt_depth = r.at("mttd").get<int>();
    t.root.in_mtt_region = r.at("mtt").get<bool>();
    t.root_state = state_from_json(j.at("state"));
    const json& gt = j.at("gt");
    if (!gt.is_array() || gt.size() != kNumSplitModes)
      throw IoError("gt array must have " + std::to_string(kNumSplitModes) + " entries");
    for (size_t i = 0; i < kNumSplitModes; ++i) {
      if (gt[i].is_null())
        t.root_gt[i] = std::nullopt;
      else
        t.root_gt[i] = gt[i].get<double>();
    }
    for (const json& ja : j.at("actions")) {
      ActionRecord a;
      const int idx = ja.at("a").get<int>();
      if (idx < 1 || idx >= kNumSplitModes)
        throw IoError("action index out of range: " + std::to_string(idx));
      a.action = SplitMode(idx);
      a.delta_split_cost = ja.at("delta").get<double>();
      a.optimal = ja.at("opt").get<bool>();
      for (const json& js : ja.at("subs")) {
        SubRecord s;
        s.state = state_from_json(js.at("state"));
        s.gt_cost = js.at("gt").get<double>();
        a.subs.push_back(std::move(s));
      }
      t.actions.push_back(std::move(a));
    }
    return t;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(std::string("bad trajectory record: ") + e.what());
  }
}

namespace {

json header_to_json(const TrajectoryFileHeader& h) {
  json j;
  j["type"] = "header";
  j["v"] = h.version;
  j["dim"] = h.state_dim;
  j["qps"] = h.qps;
  j["caps"] = h.mtt_caps;
  j["eps"] = h.epsilon;
  j["seed"] = h.seed;
  return j;
}

TrajectoryFileHeader header_from_json(const json& j) {
  TrajectoryFileHeader h;
  if (j.value("type", "") != "header") throw IoError("first line is not a header record");
  h.version = j.at("v").get<int>();
  if (h.version != 1) throw IoError("unsupported file version " + std::to_string(h.version));
  h.state_dim = j.at("dim").get<int>();
  if (h.state_dim != int(kStateDim))
    throw IoError("file has feature dimension " + std::to_string(h.state_dim) + ", expected " +
                  std::to_string(kStateDim));
  h.qps = j.at("qps").get<std::vector<int>>();
  h.mtt_caps = j.at("caps").get<std::vector<int>>();
  h.epsilon = j.at("eps").get<double>();
  h.seed = j.at("seed").get<uint64_t>();
  return h;
}

}  // namespace

void write_trajectories(const std::string& path, const TrajectoryFileHeader& header,
                        std::span<const Trajectory> trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << header_to_json(header).dump() << "\n";
  for (const Trajectory& t : trajectories) out << serialize_trajectory(t) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

TrajectoryFile read_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  TrajectoryFile file;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      try {
        file.header = header_from_json(json::parse(line));
      } catch (const json::exception& e) {
        throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
      } catch (const IoError& e) {
        throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
      have_header = true;
      continue;
    }
    try {
      file.records.push_back(parse_trajectory(line));
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw IoError(path + ": missing header record");
  return file;
}

}  // namespace qtmtt
