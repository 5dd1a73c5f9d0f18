#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dcmodel/scenario.hpp"

namespace fs = std::filesystem;
using namespace dcmodel;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

int run_one(const fs::path& path, const std::string& out, bool quiet) {
  try {
    const Report rep = run_scenario(load_scenario(path));
    if (!out.empty()) {
      std::ofstream f(out);
      if (!f) {
        std::cerr << "cannot write " << out << "\n";
        return kExitInput;
      }
      f << report_json(rep).dump(2) << "\n";
    }
    if (!quiet) std::cout << report_table(rep);
    return rep.pass() ? kExitPass : kExitFail;
  } catch (const Error& e) {
    std::cerr << path.string() << ": " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification harness for truncated dilation models"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_path, "write the JSON report here");
  run->add_flag("--quiet", quiet, "suppress the table");

  auto* list = app.add_subcommand("list-checks", "print the registered checks");

  std::string suite_dir;
  bool suite_quiet = false;
  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("dir", suite_dir, "directory of scenario files")->required();
  suite->add_flag("--quiet", suite_quiet, "suppress the tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInput;
  }

  if (*run) return run_one(scenario_path, out_path, quiet);

  if (*list) {
    for (const auto& c : check_registry())
      std::cout << c.name << "\t" << c.anchor << "\t" << regime_name(c.regime) << "\t" << c.description << "\n";
    return kExitPass;
  }

  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(suite_dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  if (ec) {
    std::cerr << "cannot read " << suite_dir << ": " << ec.message() << "\n";
    return kExitInput;
  }
  std::sort(files.begin(), files.end());
  int worst = kExitPass;
  for (const auto& f : files) {
    const int code = run_one(f, "", suite_quiet);
    worst = std::max(worst, code);
    std::cout << (code == kExitPass ? "PASS " : code == kExitFail ? "FAIL " : "ERROR ") << f.filename().string() << "\n";
  }
  return worst;
}
