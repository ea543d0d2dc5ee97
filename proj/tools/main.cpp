#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "config/run_config.hpp"
#include "perf/perf_model.hpp"
#include "report/experiment.hpp"
#include "workload/workload.hpp"

using namespace ssdsim;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
  // SSDSIM_OUT_DIR beats the configured directory.
  const char* env = std::getenv("SSDSIM_OUT_DIR");
  std::filesystem::path base = env ? env : dir;
  std::filesystem::create_directories(base);
  return (base / name).string();
}

std::vector<SimTime> parse_us_list(const std::string& csv) {
  std::vector<SimTime> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<SimTime>(std::stod(item) * 1000.0));
  return out;
}

std::vector<std::uint32_t> parse_u32_list(const std::string& csv) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

void print_report(const report::RunReport& r) {
  std::cout << "scheme=" << r.scheme << " workload=" << r.workload
            << " elapsed=" << r.elapsed_ns / 1e6 << "ms commands=" << r.commands
            << " iops=" << r.iops << " gbps=" << r.throughput_gbps
            << " mean_lat=" << r.mean_latency_us << "us binding="
            << r.binding_stage << " waf=" << r.waf << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssdsim: discrete-event SSD simulator with a hardware-automated "
               "map management unit and DFTL/CDFTL baselines"};
  app.require_subcommand(1);

  std::string preset = "desk";
  std::string config_file;
  std::vector<std::string> overrides;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--preset", preset, "starting preset: paper-ref, desk, scale-32, none");
    cmd->add_option("--config", config_file, "key-value config file");
    cmd->add_option("--set", overrides, "override, e.g. --set nand.channels=8");
  };

  // run
  auto* run_cmd = app.add_subcommand("run", "run one experiment and emit a report CSV");
  add_config_flags(run_cmd);

  // compare
  auto* cmp_cmd = app.add_subcommand(
      "compare", "run one workload across schemes, normalized to ideal");
  add_config_flags(cmp_cmd);
  std::vector<std::string> scheme_list = {"ideal", "fmmu", "cdftl:4", "cdftl:1",
                                          "dftl:1"};
  cmp_cmd->add_option("--schemes", scheme_list,
                      "scheme entries, scheme[:cores], e.g. fmmu cdftl:4");

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "FMMU scalability sweep across NAND topologies");
  add_config_flags(sweep_cmd);

  // model
  auto* model_cmd = app.add_subcommand("model", "closed-form stage-bound model");
  std::string model_channels = "1,2,4,8,16";
  std::string model_ways = "8";
  std::string model_tftl_us = "0,1,2,4";
  bool model_miss = false;
  std::uint32_t model_io_kb = 4;
  std::uint64_t model_bus_overhead_ns = 0;
  std::string model_out = "model_sweep.csv";
  model_cmd->add_option("--channels", model_channels, "channel counts");
  model_cmd->add_option("--ways", model_ways, "way counts");
  model_cmd->add_option("--t-ftl-us", model_tftl_us, "FTL times in us");
  model_cmd->add_flag("--miss", model_miss, "0% map hit ratio (default 100%)");
  model_cmd->add_option("--io-kb", model_io_kb, "command size in KB");
  model_cmd->add_option("--bus-overhead-ns", model_bus_overhead_ns,
                        "per-transfer bus overhead");
  model_cmd->add_option("--out", model_out, "output CSV name");

  // validate-trace
  auto* trace_cmd = app.add_subcommand("validate-trace", "parse a trace and print stats");
  std::string trace_path;
  bool trace_csv = false;
  double trace_capacity_gb = 16.0;
  trace_cmd->add_option("path", trace_path, "trace file")->required();
  trace_cmd->add_flag("--csv", trace_csv, "CSV layout instead of DiskSim ASCII");
  trace_cmd->add_option("--capacity-gb", trace_capacity_gb,
                        "device capacity for wrap statistics");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      config::RunConfig rc = config::build_run_config(preset,
          config_file.empty() ? std::nullopt : std::optional(config_file), overrides);
      report::RunReport r = report::run_experiment(rc);
      print_report(r);
      std::ofstream out(out_path(rc.out_dir, rc.label + "_report.csv"));
      report::write_csv_header(out);
      report::write_csv_row(out, r);
      std::cout << "report: " << out_path(rc.out_dir, rc.label + "_report.csv")
                << "\n";
    } else if (cmp_cmd->parsed()) {
      config::RunConfig base = config::build_run_config(preset,
          config_file.empty() ? std::nullopt : std::optional(config_file), overrides);
      std::vector<config::RunConfig> configs;
      for (const std::string& entry : scheme_list) {
        config::RunConfig rc = base;
        auto colon = entry.find(':');
        std::string scheme = entry.substr(0, colon);
        config::apply_key(rc, "ftl.scheme", scheme);
        if (colon != std::string::npos)
          config::apply_key(rc, "ftl.cores", entry.substr(colon + 1));
        rc.label = entry;
        configs.push_back(std::move(rc));
      }
      auto rows = report::compare(configs);
      report::write_compare_csv(std::cout, rows);
      std::ofstream out(out_path(base.out_dir, "compare.csv"));
      report::write_compare_csv(out, rows);
    } else if (sweep_cmd->parsed()) {
      if (preset == "desk") preset = "scale-32";
      config::RunConfig base = config::build_run_config(preset,
          config_file.empty() ? std::nullopt : std::optional(config_file), overrides);
      auto points = report::scale_sweep(base);
      report::write_scale_csv(std::cout, points);
      std::ofstream out(out_path(base.out_dir, "scale_sweep.csv"));
      report::write_scale_csv(out, points);
    } else if (model_cmd->parsed()) {
      nand::NandTiming timing;
      timing.bus_overhead_per_op = model_bus_overhead_ns;
      perf::TimingParams p = perf::TimingParams::from_nand(
          timing, model_io_kb * 1024, 15'760'000'000ull);
      perf::TopologyParams topo;
      auto points = perf::sweep(parse_u32_list(model_channels),
                                parse_u32_list(model_ways),
                                parse_us_list(model_tftl_us), {!model_miss}, p,
                                topo, model_io_kb * 1024);
      perf::write_sweep_csv(std::cout, points);
      std::ofstream out(out_path(".", model_out));
      perf::write_sweep_csv(out, points);
    } else if (trace_cmd->parsed()) {
      auto records = workload::parse_trace_file(trace_path, trace_csv);
      auto s = workload::summarize(
          records, static_cast<std::uint64_t>(trace_capacity_gb * 1e9 / 512), 512);
      std::cout << "records=" << s.count
                << " read_ratio_cmd=" << s.read_ratio_by_command
                << " read_ratio_bytes=" << s.read_ratio_by_bytes
                << " avg_read_bytes=" << s.avg_read_bytes
                << " avg_write_bytes=" << s.avg_write_bytes
                << " wrapped=" << s.wrapped << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SimError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
