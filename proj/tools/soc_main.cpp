#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soc/config.hpp"
#include "soc/dataset.hpp"
#include "soc/engine.hpp"
#include "soc/error.hpp"
#include "soc/model.hpp"
#include "soc/synthdata.hpp"
#include "soc/tape.hpp"
#include "soc/verify.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string data_dir;
  std::string checkpoint;
  std::string split;
  int64_t seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "configuration file (key=value lines)");
  cmd->add_option("--seed", opt.seed, "override the run seed");
  cmd->add_option("--out", opt.out_dir, "override the output directory");
  cmd->add_option("--data", opt.data_dir, "override the dataset directory");
  cmd->add_option("--checkpoint", opt.checkpoint, "parameter bundle to load");
  cmd->add_option("--split", opt.split, "dataset split (train | val)");
  cmd->add_option("--set", opt.overrides, "extra key=value overrides")->take_all();
}

soc::Config build_config(const CliOptions& opt) {
  soc::Config cfg;
  if (!opt.config_path.empty()) cfg = soc::Config::from_file(opt.config_path);
  for (const std::string& kv : opt.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw soc::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed >= 0) cfg.seed = static_cast<uint64_t>(opt.seed);
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (!opt.data_dir.empty()) cfg.data_dir = opt.data_dir;
  if (!opt.checkpoint.empty()) cfg.checkpoint = opt.checkpoint;
  if (!opt.split.empty()) cfg.split = opt.split;
  cfg.validate();
  return cfg;
}

void write_reports(const soc::Config& cfg, const soc::EvalReport& report) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream tsv(cfg.out_dir + "/report.tsv");
  tsv << report.to_tsv();
  std::ofstream js(cfg.out_dir + "/report.json");
  js << report.to_json() << "\n";
}

int cmd_gen(const soc::Config& cfg) {
  soc::make_dataset(cfg);
  std::cout << "wrote " << cfg.n_train << " train and " << cfg.n_val << " val videos to "
            << cfg.data_dir << "\n";
  return 0;
}

int cmd_train(const soc::Config& cfg) {
  auto data = soc::load_split(cfg.data_dir, "train", cfg);
  soc::Model model(cfg);
  if (!cfg.checkpoint.empty()) model.params().load(cfg.checkpoint);
  auto history = soc::train(model, data, cfg);
  if (!history.empty()) {
    std::cout << "final epoch loss " << history.back().total << "\n";
  }
  auto val = soc::load_split(cfg.data_dir, cfg.split, cfg);
  soc::EvalReport report = soc::evaluate(model, val);
  write_reports(cfg, report);
  std::cout << report.to_tsv();
  std::cout << "checkpoint " << cfg.out_dir << "/model.ckpt\n";
  return 0;
}

int cmd_eval(const soc::Config& cfg) {
  auto data = soc::load_split(cfg.data_dir, cfg.split, cfg);
  soc::Model model(cfg);
  if (!cfg.checkpoint.empty()) model.params().load(cfg.checkpoint);
  soc::EvalReport report = soc::evaluate(model, data);
  write_reports(cfg, report);
  std::cout << report.to_tsv();
  return 0;
}

int cmd_infer(const soc::Config& cfg) {
  auto data = soc::load_split(cfg.data_dir, cfg.split, cfg);
  soc::Model model(cfg);
  if (!cfg.checkpoint.empty()) model.params().load(cfg.checkpoint);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream masks(cfg.out_dir + "/predictions.txt");
  for (const soc::LoadedSample& s : data) {
    soc::VideoEval ve = soc::eval_video(model, s);
    for (size_t t = 0; t < ve.pred.size(); ++t) {
      masks << s.id << " " << t << " " << soc::rle_encode(ve.pred[t]) << "\n";
    }
    std::cout << s.id << " query " << ve.query << " j " << ve.j << "\n";
  }
  std::cout << "masks written to " << cfg.out_dir << "/predictions.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"referring video object segmentation, desk scale"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string mode;
  for (const char* name : {"gen", "train", "eval", "infer", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, opt);
    sub->callback([&mode, name] { mode = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (mode == "verify") {
      return soc::run_verify(std::cout) ? 0 : 1;
    }
    soc::Config cfg = build_config(opt);
    if (mode == "gen") return cmd_gen(cfg);
    if (mode == "train") return cmd_train(cfg);
    if (mode == "eval") return cmd_eval(cfg);
    if (mode == "infer") return cmd_infer(cfg);
    std::cerr << "unknown command\n";
    return 2;
  } catch (const soc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
