// qtmtt command-line front end: encode / collect / train / eval / sweep.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric
// failure.  All stdout output is deterministic under a fixed seed in
// single-job mode; wall-clock timings go to stderr only.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtmtt/agent.hpp"
#include "qtmtt/encoder.hpp"
#include "qtmtt/errors.hpp"
#include "qtmtt/io.hpp"
#include "qtmtt/metrics.hpp"
#include "qtmtt/partition.hpp"

namespace fs = std::filesystem;
using namespace qtmtt;

namespace {

struct CommonOpts {
  std::vector<std::string> inputs;
  int raw_width = 0;
  int raw_height = 0;
  std::vector<int> qps;
  PartitionConstraints constraints;
  std::string selector = "exhaustive";
  std::string model_path;
  int topn = 2;
  double threshold = 1.0;
  int qt_cap = 99;
  int mtt_cap = 99;
  uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;
};

void add_constraint_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--ctu", o.constraints.ctu_size, "CTU side in pixels (power of two)");
  cmd->add_option("--min-cu", o.constraints.min_cu_side, "minimum CU side");
  cmd->add_option("--max-qt-depth", o.constraints.max_qt_depth, "maximum quad-split depth");
  cmd->add_option("--max-mtt-depth", o.constraints.max_mtt_depth, "maximum binary/ternary depth");
  cmd->add_option("--max-tt", o.constraints.max_tt_side, "maximum side allowing ternary splits");
}

void add_selector_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--selector", o.selector, "exhaustive | heuristic | agent | random")
      ->check(CLI::IsMember({"exhaustive", "heuristic", "agent", "random"}));
  cmd->add_option("--model", o.model_path, "model file for the agent selector");
  cmd->add_option("--topn", o.topn, "number of split modes the agent keeps");
  cmd->add_option("--threshold", o.threshold, "agent q-gap threshold in [0,1]");
  cmd->add_option("--qt-cap", o.qt_cap, "heuristic selector: quad-split depth cap");
  cmd->add_option("--mtt-cap", o.mtt_cap, "heuristic selector: binary/ternary depth cap");
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<NamedFrame> load_corpus(const CommonOpts& o) {
  if (o.inputs.empty()) throw ConfigError("no input files (--in)");
  std::vector<NamedFrame> frames;
  for (const std::string& path : o.inputs)
    frames.push_back(NamedFrame{stem_of(path), read_image(path, o.raw_width, o.raw_height)});
  return frames;
}

QNetwork load_required_model(const std::string& path) {
  if (path.empty()) throw ConfigError("the agent selector needs --model");
  return load_model(path);
}

SelectorSpec spec_from_opts(const CommonOpts& o) {
  SelectorSpec spec;
  if (o.selector == "exhaustive") {
    spec.kind = SelectorSpec::Kind::Exhaustive;
  } else if (o.selector == "heuristic") {
    spec.kind = SelectorSpec::Kind::DepthCap;
    spec.qt_cap = o.qt_cap;
    spec.mtt_cap = o.mtt_cap;
  } else if (o.selector == "agent") {
    spec.kind = SelectorSpec::Kind::Agent;
    spec.topn = o.topn;
    spec.threshold = o.threshold;
  } else {
    spec.kind = SelectorSpec::Kind::Random;
    spec.topn = o.topn;
    spec.seed = o.seed;
  }
  spec.label = o.selector;
  return spec;
}

// ---------------------------------------------------------------------------

int cmd_encode(const CommonOpts& o, bool open_loop) {
  std::vector<int> qps = o.qps.empty() ? std::vector<int>{32} : o.qps;
  const std::vector<NamedFrame> corpus = load_corpus(o);

  QNetwork net;
  const QNetwork* net_ptr = nullptr;
  if (o.selector == "agent") {
    net = load_required_model(o.model_path);
    net_ptr = &net;
  }
  const auto selector = make_selector(spec_from_opts(o), net_ptr);
  if (!o.out_dir.empty()) fs::create_directories(o.out_dir);

  for (const NamedFrame& nf : corpus) {
    const Frame padded = pad_to_multiple(nf.frame, o.constraints.ctu_size);
    for (int qp : qps) {
      const FrameEncodeReport rep = encode_frame(padded, qp, o.constraints, *selector, open_loop);
      std::cout << "frame " << nf.id << " qp " << qp << ": cu=" << rep.stats.cu_reconstructions
                << " px=" << rep.stats.pixel_reconstructions
                << " rate=" << format_double(rep.rate_bits)
                << " psnr=" << format_double(rep.psnr_db)
                << " modeled_s=" << format_double(rep.stats.modeled_seconds()) << "\n";
      std::cerr << "frame " << nf.id << " qp " << qp << " wall_s "
                << format_double(rep.stats.wall_seconds) << "\n";
      if (!o.out_dir.empty()) {
        Frame crop;
        crop.luma = Grid<uint8_t>(nf.frame.width(), nf.frame.height());
        for (int y = 0; y < crop.height(); ++y)
          for (int x = 0; x < crop.width(); ++x) crop.luma.at(x, y) = rep.recon.luma.at(x, y);
        write_pgm(crop, (fs::path(o.out_dir) / (nf.id + "_qp" + std::to_string(qp) + ".pgm"))
                            .string());
      }
    }
  }
  return 0;
}

int cmd_collect(const CommonOpts& o, double epsilon, const std::string& out_file) {
  if (out_file.empty()) throw ConfigError("collect needs --out <file>");
  const std::vector<NamedFrame> corpus = load_corpus(o);

  CollectConfig cfg;
  cfg.constraints = o.constraints;
  cfg.epsilon = epsilon;
  cfg.seed = o.seed;

  QNetwork net;
  const QNetwork* policy = nullptr;
  if (!o.model_path.empty()) {
    net = load_model(o.model_path);
    policy = &net;
  }
  const std::vector<Trajectory> records = collect_trajectories(corpus, cfg, policy);

  TrajectoryFileHeader header;
  header.qps = cfg.qps;
  header.mtt_caps = cfg.mtt_caps;
  header.epsilon = cfg.epsilon;
  header.seed = cfg.seed;
  write_trajectories(out_file, header, records);
  std::cout << "collected " << records.size() << " trajectories from " << corpus.size()
            << " frames -> " << out_file << "\n";
  return 0;
}

int cmd_train(const std::string& in_file, const std::string& resume, const CommonOpts& o,
              TrainConfig cfg) {
  if (o.inputs.size() + (in_file.empty() ? 0 : 1) != 1)
    throw ConfigError("train needs exactly one trajectory file (--in)");
  const std::string path = in_file.empty() ? o.inputs.front() : in_file;
  const TrajectoryFile file = read_trajectories(path);
  if (file.records.empty()) throw ConfigError("trajectory file has no records");

  QNetwork net = resume.empty() ? QNetwork::seeded(cfg.seed) : load_model(resume);
  if (o.out_dir.empty()) throw ConfigError("train needs --out <dir>");
  fs::create_directories(o.out_dir);
  cfg.checkpoint_dir = o.out_dir;

  const TrainResult result = train(file.records, std::move(net), cfg);

  const fs::path model_path = fs::path(o.out_dir) / "model.txt";
  save_model(result.net, model_path.string());

  std::ofstream csv(fs::path(o.out_dir) / "loss.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write loss.csv");
  csv << "step,mse1,mse2,mse3,total\n";
  for (const TrainStep& s : result.history)
    csv << s.step << ',' << format_double(s.loss.mse1) << ',' << format_double(s.loss.mse2) << ','
        << format_double(s.loss.mse3) << ',' << format_double(s.loss.total) << "\n";

  std::cout << "trained " << result.history.size() << " steps on " << file.records.size()
            << " trajectories\n";
  if (!result.history.empty()) {
    const TrainStep& last = result.history.back();
    std::cout << "final step " << last.step << " loss total=" << format_double(last.loss.total)
              << " mse1=" << format_double(last.loss.mse1)
              << " mse2=" << format_double(last.loss.mse2)
              << " mse3=" << format_double(last.loss.mse3) << "\n";
  }
  std::cout << "model -> " << model_path.string() << "\n";
  return 0;
}

void print_rows(const std::vector<TradeoffPoint>& rows, const std::string& out_dir,
                const std::string& csv_name) {
  const std::string csv = tradeoff_csv(rows);
  std::cout << csv;
  for (const TradeoffPoint& r : rows)
    std::cout << "raw_ratios label=" << r.label
              << " pixel=" << format_double(r.pixel_ratio_raw_percent)
              << " cu=" << format_double(r.cu_ratio_raw_percent) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / csv_name, std::ios::binary);
    if (!f) throw IoError("cannot write " + csv_name);
    f << csv;
    nlohmann::json j = nlohmann::json::array();
    for (const TradeoffPoint& r : rows) {
      nlohmann::json row;
      row["label"] = r.label;
      row["topn"] = r.topn;
      row["threshold"] = r.threshold;
      row["bd_rate_pct"] = r.bd_rate_percent;
      row["et_pct"] = r.et_percent;
      row["pixel_ratio_pct"] = r.pixel_ratio_percent;
      row["cu_ratio_pct"] = r.cu_ratio_percent;
      row["pixel_ratio_raw_pct"] = r.pixel_ratio_raw_percent;
      row["cu_ratio_raw_pct"] = r.cu_ratio_raw_percent;
      j.push_back(std::move(row));
    }
    std::ofstream jf(fs::path(out_dir) / (csv_name.substr(0, csv_name.find('.')) + ".json"),
                     std::ios::binary);
    jf << j.dump(2) << "\n";
  }
}

int cmd_eval(const CommonOpts& o) {
  const std::vector<NamedFrame> corpus = load_corpus(o);
  QNetwork net;
  const QNetwork* net_ptr = nullptr;
  if (o.selector == "agent") {
    net = load_required_model(o.model_path);
    net_ptr = &net;
  }
  SelectorSpec spec = spec_from_opts(o);
  spec.label = o.selector == "agent"
                   ? "agent_N" + std::to_string(o.topn) + "_T" + format_double(o.threshold)
                   : o.selector;
  SelectorSpec anchor;  // exhaustive
  anchor.label = "exhaustive";

  const std::vector<SelectorSpec> grid{spec};
  const std::vector<TradeoffPoint> rows =
      pareto_sweep(corpus, grid, o.constraints, anchor, net_ptr, true, &std::cerr);
  if (rows.empty()) throw NumericError("evaluation produced no valid row");
  print_rows(rows, o.out_dir, "eval.csv");
  return 0;
}

int cmd_sweep(const CommonOpts& o, std::vector<int> topns, std::vector<double> thresholds,
              std::vector<int> heuristic_mtt_caps, bool random_baseline) {
  const std::vector<NamedFrame> corpus = load_corpus(o);
  QNetwork net;
  const QNetwork* net_ptr = nullptr;
  if (!o.model_path.empty()) {
    net = load_model(o.model_path);
    net_ptr = &net;
  }
  if (topns.empty()) topns = {2, 3, 4, 5};
  if (thresholds.empty()) thresholds = {1.0};
  if (heuristic_mtt_caps.empty()) heuristic_mtt_caps = {0, 1, 2};

  std::vector<SelectorSpec> grid;
  if (net_ptr) {
    for (int n : topns) {
      for (double t : thresholds) {
        SelectorSpec s;
        s.kind = SelectorSpec::Kind::Agent;
        s.topn = n;
        s.threshold = t;
        s.label = "agent_N" + std::to_string(n) + "_T" + format_double(t);
        grid.push_back(s);
      }
    }
  }
  for (int cap : heuristic_mtt_caps) {
    SelectorSpec s;
    s.kind = SelectorSpec::Kind::DepthCap;
    s.qt_cap = o.constraints.max_qt_depth;
    s.mtt_cap = cap;
    s.label = "heuristic_mtt" + std::to_string(cap);
    grid.push_back(s);
  }
  if (random_baseline) {
    for (size_t i = 0; i < topns.size(); ++i) {
      SelectorSpec s;
      s.kind = SelectorSpec::Kind::Random;
      s.topn = topns[i];
      s.seed = derive_seed(o.seed, 0x5eed, topns[i], 0);
      s.label = "random_N" + std::to_string(topns[i]);
      grid.push_back(s);
    }
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty (need --model or heuristic caps)");

  SelectorSpec anchor;
  anchor.label = "exhaustive";
  const std::vector<TradeoffPoint> rows =
      pareto_sweep(corpus, grid, o.constraints, anchor, net_ptr, true, &std::cerr);
  print_rows(rows, o.out_dir, "sweep.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qtmtt: a desk-scale intra-frame partition-search laboratory.\n"
      "Exit codes: 0 ok, 2 config error, 3 i/o error, 4 numeric failure."};
  app.require_subcommand(1);

  CommonOpts o;
  double epsilon = 1.0;
  std::string collect_out, train_in, resume;
  bool open_loop = false, random_baseline = false;
  TrainConfig tcfg;
  std::vector<int> sweep_topns;
  std::vector<double> sweep_thresholds;
  std::vector<int> sweep_heuristic_caps;

  auto add_common = [&](CLI::App* cmd, bool with_selector) {
    cmd->add_option("--in", o.inputs, "input file(s)");
    cmd->add_option("--width", o.raw_width, "raw input width (headerless luma)");
    cmd->add_option("--height", o.raw_height, "raw input height");
    cmd->add_option("--seed", o.seed, "deterministic seed");
    cmd->add_option("--jobs", o.jobs, "worker threads (1 = reproducibility reference)");
    cmd->add_option("--out", o.out_dir, "output directory (or file for collect)");
    add_constraint_flags(cmd, o);
    if (with_selector) add_selector_flags(cmd, o);
  };

  CLI::App* enc = app.add_subcommand("encode", "encode frames and report search statistics");
  add_common(enc, true);
  enc->add_option("--qp", o.qps, "quantization parameter(s)")->check(CLI::Range(0, 51));
  enc->add_flag("--open-loop", open_loop, "predict only from inside each CTU");

  CLI::App* col = app.add_subcommand("collect", "record two-level search trajectories");
  add_common(col, false);
  col->add_option("--model", o.model_path, "optional policy model for greedy actions");
  col->add_option("--epsilon", epsilon, "exploration rate in [0,1]");

  CLI::App* trn = app.add_subcommand("train", "fit the split-mode value network");
  add_common(trn, false);
  trn->add_option("--resume", resume, "checkpoint to continue from");
  trn->add_option("--epochs", tcfg.epochs, "training epochs");
  trn->add_option("--batch", tcfg.batch_size, "minibatch size");
  trn->add_option("--lr", tcfg.learning_rate, "learning rate");
  trn->add_option("--momentum", tcfg.momentum, "momentum coefficient");

  CLI::App* evl = app.add_subcommand("eval", "compare one selector against the exhaustive anchor");
  add_common(evl, true);

  CLI::App* swp = app.add_subcommand("sweep", "trade-off curve over a selector grid");
  add_common(swp, false);
  swp->add_option("--model", o.model_path, "agent model (enables agent rows)");
  swp->add_option("--topn", sweep_topns, "agent/random N values");
  swp->add_option("--threshold", sweep_thresholds, "agent T values");
  swp->add_option("--heuristic-mtt-cap", sweep_heuristic_caps, "depth-cap rows");
  swp->add_flag("--random-baseline", random_baseline, "add random selector rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    o.constraints.validate();
    if (enc->parsed()) return cmd_encode(o, open_loop);
    if (col->parsed()) return cmd_collect(o, epsilon, o.out_dir);
    if (trn->parsed()) {
      tcfg.seed = o.seed;
      return cmd_train(train_in, resume, o, tcfg);
    }
    if (evl->parsed()) return cmd_eval(o);
    if (swp->parsed())
      return cmd_sweep(o, sweep_topns, sweep_thresholds, sweep_heuristic_caps, random_baseline);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
