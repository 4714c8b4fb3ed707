#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "skewstab/experiment.hpp"

using namespace skewstab;

int main(int argc, char** argv) {
  CLI::App app{"Transfer-operator experiments for contracting skew products"};
  app.set_version_flag("--version", std::string(SKEWSTAB_VERSION));
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool verbose = false;

  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: <config dir>/out/<subcommand>)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();

  try {
    const auto cfg = parse_config(config_path);
    RunOptions opts;
    if (sub->count("--seed")) opts.seed = seed;
    opts.threads = threads;
    if (verbose) opts.log = &std::cerr;
    if (out_dir.empty())
      out_dir = (std::filesystem::path(config_path).parent_path() / "out" / subcommand).string();

    const auto report = run_experiment(subcommand, cfg, opts);
    write_report(report, out_dir);
    for (const auto& v : report.verdicts)
      std::printf("%s %s value=%s bound=%s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), cell(v.value).c_str(),
                  cell(v.bound).c_str());
    std::printf("%s: %s (outputs in %s)\n", subcommand.c_str(), report.all_pass() ? "all bounds hold" : "bound violation",
                out_dir.c_str());
    return report.all_pass() ? kExitPass : kExitViolation;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error (%s): %s\n", subcommand.c_str(), e.what());
  }
  return kExitUsage;
}
