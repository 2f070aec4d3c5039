// Copyright 2026 The qtraj Authors
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

#include "qtraj/config.hpp"
#include "qtraj/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFault = 3;

int run_command(const std::string& path, const std::string& out, bool validate_only, int threads) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read config '" << path << "'\n";
    return kExitConfig;
  }
  std::stringstream ss;
  ss << in.rdbuf();

  qtraj::RunConfig cfg;
  try {
    cfg = qtraj::parse_config(ss.str());
  } catch (const qtraj::ConfigError& e) {
    for (const auto& msg : e.errors()) std::cerr << path << ": " << msg << "\n";
    return kExitConfig;
  }
  if (validate_only) {
    std::cout << "config ok (hash " << cfg.hash() << ", " << cfg.tasks.size() << " tasks)\n";
    return 0;
  }

  qtraj::ExecuteOptions opt;
  if (!out.empty()) opt.output_dir = out;
  if (threads > 0) opt.threads = threads;
  qtraj::RunManifest man;
  try {
    man = qtraj::execute(cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitFault;
  }
  for (const auto& t : man.tasks) {
    std::cout << t.task << ": " << (t.error.empty() ? "ok" : "fault") << " (" << t.seconds << " s";
    if (t.fault_count) std::cout << ", " << t.fault_count << " faulted trajectories";
    std::cout << ")\n";
    if (!t.error.empty()) std::cerr << "  " << t.error << "\n";
  }
  std::cout << man.files.size() << " files in " << man.output_dir << "\n";
  return man.faulted() ? kExitFault : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum trajectory simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool validate_only = false;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Execute the tasks of a run config");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_flag("--validate-only", validate_only, "Parse and check the config without computing");
  run->add_option("--threads", threads, "Worker threads (overrides run.threads)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return run_command(config_path, out_dir, validate_only, threads);
}
