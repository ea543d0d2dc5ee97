#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssd.hpp"
#include "workload/workload.hpp"

namespace ssdsim::config {

// Flat key-value text with [section] headers; keys address as "section.key".
class KeyValues {
 public:
  static KeyValues parse_file(const std::string& path);
  static KeyValues parse(std::istream& in, const std::string& origin);

  void set(const std::string& dotted_key, const std::string& value) {
    values_[dotted_key] = value;
  }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class WorkloadKind : std::uint8_t { Synthetic, Trace };
enum class PreconditionPolicy : std::uint8_t { Auto, Fill, None };
enum class RunMode : std::uint8_t { Duration, CommandLimit, TraceEnd };

// Everything one experiment needs: device, scheme, workload, phases.
struct RunConfig {
  std::string label = "run";
  SsdConfig ssd;
  std::uint64_t seed = 1;

  WorkloadKind kind = WorkloadKind::Synthetic;
  workload::SyntheticSpec synthetic;
  std::string trace_path;
  bool trace_csv = false;
  bool trace_open_loop = false;

  PreconditionPolicy precondition = PreconditionPolicy::Auto;
  RunMode mode = RunMode::Duration;
  SimTime warm_ns = ms(50);
  SimTime measure_ns = ms(200);
  std::uint64_t command_limit = 0;

  std::string out_dir = ".";
};

// Named starting points. "paper-ref" is the 16GB 16-channel/8-way reference
// device; "desk" is a small fast-iterating device; "scale-32" the PCIe
// x32-class scalability setup.
RunConfig make_preset(const std::string& name);
std::vector<std::string> preset_names();

// Preset -> file -> --set overrides, in that order.
RunConfig build_run_config(const std::string& preset,
                           const std::optional<std::string>& config_file,
                           const std::vector<std::string>& overrides);

// Applies one dotted key to the config; unknown keys are diagnostics.
void apply_key(RunConfig& rc, const std::string& key, const std::string& value);

}  // namespace ssdsim::config
