// Copyright 2026 The scoreprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "scoreprobe/errors.hpp"
#include "scoreprobe/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string method;
  int trials = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Experiment config (JSON)");
  cmd->add_option("--seed", f.seed, "Master seed override");
  cmd->add_option("--out", f.out, "Output directory override");
  cmd->add_option("--method", f.method,
                  "Method tag(s), comma separated: audio-nes, latent-nes, "
                  "audio-gd, sp");
  cmd->add_option("--trials", f.trials, "Number of victims")
      ->check(CLI::NonNegativeNumber);
}

scoreprobe::ExperimentConfig resolve(const CommonFlags& f, CLI::App* cmd) {
  scoreprobe::ExperimentConfig cfg;
  if (!f.config_path.empty())
    cfg = scoreprobe::load_experiment_config(f.config_path);
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.method.empty()) {
    cfg.methods.clear();
    std::stringstream ss(f.method);
    std::string tag;
    while (std::getline(ss, tag, ',')) cfg.methods.push_back(tag);
  }
  if (f.trials >= 0) cfg.trials = f.trials;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-query impersonation experiments on a synthetic "
               "speaker-verification world"};
  app.require_subcommand(1);

  CommonFlags calib_f, attack_f, train_f, idc_f;
  auto* calib = app.add_subcommand("calibrate", "Compute tau_E / tau_M per oracle");
  add_common(calib, calib_f);
  auto* attack = app.add_subcommand("attack", "Run the selected attacks");
  add_common(attack, attack_f);
  auto* train = app.add_subcommand("train-inverse", "Train the affine inverse model");
  add_common(train, train_f);
  bool ablation = false;
  train->add_flag("--ablation", ablation,
                  "Also train without L_SC and tabulate both objectives");
  auto* idc = app.add_subcommand("id-constraints",
                                 "Round-trip and angular robustness tables");
  add_common(idc, idc_f);
  auto* rep = app.add_subcommand("report", "Render tables from a results directory");
  std::string report_dir;
  rep->add_option("dir", report_dir, "Results directory");
  rep->add_option("--out", report_dir, "Results directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calib) {
      const auto cfg = resolve(calib_f, calib);
      const auto cal = scoreprobe::calibrate(cfg);
      scoreprobe::write_calibration(cfg.output_dir, cfg, cal);
      std::cout << scoreprobe::render_summary({}, &cal);
    } else if (*attack) {
      const auto cfg = resolve(attack_f, attack);
      const auto run = scoreprobe::run_attacks(cfg);
      scoreprobe::write_attack_outputs(cfg.output_dir, cfg, run);
      std::cout << scoreprobe::render_summary(run.summary, &run.calibration);
      std::cout << "ledger queries: " << run.ledger_total << "\n";
    } else if (*train) {
      const auto cfg = resolve(train_f, train);
      const auto run = scoreprobe::run_train_inverse(cfg, ablation);
      scoreprobe::write_training_outputs(cfg.output_dir, cfg, run);
      std::printf("loss: %.6f -> %.6f over %zu steps\n",
                  run.loss_history.front(), run.loss_history.back(),
                  run.loss_history.size());
      for (const auto& r : run.ablation)
        std::printf("%-10s rho=%.2f s_L=%.4f s_T=%.4f\n", r.objective.c_str(),
                    r.rho, r.local_mean, r.transfer_mean);
    } else if (*idc) {
      const auto cfg = resolve(idc_f, idc);
      const auto run = scoreprobe::run_id_constraints(cfg);
      scoreprobe::write_id_constraint_outputs(cfg.output_dir, cfg, run);
      for (const auto& r : run.rows)
        std::printf("rho=%.2f s_L=%.4f s_T=%.4f accepted=%.3f\n", r.rho,
                    r.local.mean, r.transfer.mean, r.fraction_accepted);
      for (const auto& a : run.angular)
        std::printf("angle=%2.0f mean=%.6f std=%.6f\n", a.angle_degrees,
                    a.mean, a.std);
    } else if (*rep) {
      if (report_dir.empty()) report_dir = ".";
      const auto out = scoreprobe::report(report_dir);
      if (!out.ok()) {
        for (const auto& e : out.errors) std::cerr << "error: " << e << "\n";
        return 1;
      }
      std::cout << out.text;
    }
  } catch (const scoreprobe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
