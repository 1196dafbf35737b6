// Experiment driver: train / eval / ablate / plot around the remix library.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "remix/checkpoint.hpp"
#include "remix/config.hpp"
#include "remix/trainer.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string data_dir;
  std::string out_dir;
  int64_t seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, const std::string& default_out) {
  opts.out_dir = default_out;
  cmd->add_option("-c,--config", opts.config_path, "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", opts.sets, "override one key (key=value, repeatable)");
  cmd->add_option("-d,--data", opts.data_dir, "data directory (overrides the data_dir key)");
  cmd->add_option("-o,--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the master seed");
  cmd->add_option("-w,--workers", opts.workers, "augmentation worker threads (sets REMIX_WORKERS)");
}

remix::TrainConfig build_config(const CommonOpts& opts) {
  remix::TrainConfig cfg;
  if (!opts.config_path.empty()) cfg = remix::load_config(opts.config_path);
  for (const std::string& assignment : opts.sets) remix::apply_override(cfg, assignment);
  if (!opts.data_dir.empty()) cfg.data_dir = opts.data_dir;
  if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
  if (opts.workers > 0) setenv("REMIX_WORKERS", std::to_string(opts.workers).c_str(), 1);
  remix::validate_config(cfg);
  return cfg;
}

int run_train(const CommonOpts& opts) {
  const remix::TrainConfig cfg = build_config(opts);
  const remix::DataBundle data = remix::build_data(cfg);
  std::cout << "[data] labeled " << data.labeled.size() << ", unlabeled " << data.unlabeled.size()
            << ", eval " << data.eval.size() << "\n";
  const remix::TrainResult result =
      remix::train(cfg, data.labeled, data.unlabeled, data.eval, opts.out_dir, &std::cout);
  std::cout << "[done] final ema_err " << result.final_error << "; wrote " << opts.out_dir
            << "/metrics.csv and checkpoint.bin\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const CommonOpts& opts, int count) {
  const remix::TrainState state = remix::load_checkpoint(checkpoint_path);
  remix::TrainConfig cfg = remix::parse_config_text(state.config_text);
  for (const std::string& assignment : opts.sets) remix::apply_override(cfg, assignment);
  if (!opts.data_dir.empty()) cfg.data_dir = opts.data_dir;
  remix::validate_config(cfg);

  const remix::DataBundle data = remix::build_data(cfg);
  const remix::EvalOutcome out =
      remix::evaluate_weights(state.net, state.opt.ema, data.eval, count);
  std::cout << "checkpoint: " << checkpoint_path << " (step " << state.step << ")\n"
            << "eval examples: " << (count > 0 ? std::min<size_t>(count, data.eval.size())
                                               : data.eval.size())
            << "\n"
            << "error: " << out.error << "\n"
            << "fairness: " << out.info.fairness << "\n"
            << "confidence: " << out.info.confidence << "\n"
            << "mutual_info: " << out.info.mutual_information << "\n";
  return 0;
}

int run_ablate(const CommonOpts& opts) {
  const remix::TrainConfig cfg = build_config(opts);
  remix::run_ablation_suite(cfg, opts.out_dir, &std::cout);
  std::cout << "[done] wrote " << opts.out_dir << "/ablation.csv\n";
  return 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

int run_plot(const std::string& csv_path, const std::string& column, const std::string& out_path,
             int width, int height) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(csv_path + " is empty");
  const std::vector<std::string> header = split_csv_line(line);
  size_t col = header.size();
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) col = i;
  }
  if (col == header.size()) {
    std::string known;
    for (const std::string& h : header) known += (known.empty() ? "" : ", ") + h;
    throw std::runtime_error("no column named " + column + " (have: " + known + ")");
  }

  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    const std::vector<std::string> fields = split_csv_line(line);
    if (col >= fields.size() || fields[col].empty()) continue;
    xs.push_back(std::stod(fields[0]));
    ys.push_back(std::stod(fields[col]));
  }
  if (ys.empty()) throw std::runtime_error("column " + column + " has no values");

  double lo = ys[0], hi = ys[0];
  for (double y : ys) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  if (hi == lo) hi = lo + 1.0;

  std::vector<std::string> grid(static_cast<size_t>(height), std::string(static_cast<size_t>(width), ' '));
  for (size_t i = 0; i < ys.size(); ++i) {
    const double fx = xs.size() > 1 ? (xs[i] - xs.front()) / (xs.back() - xs.front()) : 0.0;
    const int cx = static_cast<int>(fx * (width - 1) + 0.5);
    const int cy = static_cast<int>((hi - ys[i]) / (hi - lo) * (height - 1) + 0.5);
    grid[static_cast<size_t>(cy)][static_cast<size_t>(cx)] = '*';
  }

  std::ostringstream chart;
  chart << column << " over steps " << static_cast<int64_t>(xs.front()) << ".."
        << static_cast<int64_t>(xs.back()) << "\n";
  char label[64];
  for (int r = 0; r < height; ++r) {
    if (r == 0) {
      snprintf(label, sizeof(label), "%10.4g |", hi);
    } else if (r == height - 1) {
      snprintf(label, sizeof(label), "%10.4g |", lo);
    } else {
      snprintf(label, sizeof(label), "%10s |", "");
    }
    chart << label << grid[static_cast<size_t>(r)] << "\n";
  }
  chart << std::string(11, ' ') << '+' << std::string(static_cast<size_t>(width), '-') << "\n";

  if (out_path.empty()) {
    std::cout << chart.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << chart.str();
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised training experiments (consistency + mixing + self-supervision)"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "run one training experiment");
  add_common(train_cmd, train_opts, "run");

  CommonOpts eval_opts;
  std::string checkpoint_path;
  int eval_count = 0;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file written by train")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("-s,--set", eval_opts.sets, "override one config key (key=value, repeatable)");
  eval_cmd->add_option("-d,--data", eval_opts.data_dir, "data directory override");
  eval_cmd->add_option("-n,--count", eval_count, "cap on evaluation examples (0 = all)");

  CommonOpts ablate_opts;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the single-knob ablation suite");
  add_common(ablate_cmd, ablate_opts, "ablation");

  std::string plot_in, plot_column = "total_loss", plot_out;
  int plot_width = 72, plot_height = 20;
  CLI::App* plot_cmd = app.add_subcommand("plot", "render a metrics.csv column as an ascii chart");
  plot_cmd->add_option("-i,--in", plot_in, "metrics.csv path")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--column", plot_column, "column to plot (default total_loss)");
  plot_cmd->add_option("-o,--out", plot_out, "write the chart to a file instead of stdout");
  plot_cmd->add_option("--width", plot_width, "chart width in characters")->check(CLI::Range(16, 400));
  plot_cmd->add_option("--height", plot_height, "chart height in rows")->check(CLI::Range(4, 100));

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train_cmd)) return run_train(train_opts);
    if (app.got_subcommand(eval_cmd)) return run_eval(checkpoint_path, eval_opts, eval_count);
    if (app.got_subcommand(ablate_cmd)) return run_ablate(ablate_opts);
    if (app.got_subcommand(plot_cmd)) {
      return run_plot(plot_in, plot_column, plot_out, plot_width, plot_height);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
