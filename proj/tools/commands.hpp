#pragma once

#include <string>

#include "run_context.hpp"

namespace foveate::cli {

struct CharacterizeOptions {
  std::string sweep = "none";  // none | sigma | size
};

struct SegmentOptions {
  std::string input;
  int csv_width = 128;
  int csv_height = 128;
};

struct SaliencyOptions {
  std::string input;
  std::string fixture;  // "circles" generates the calibration pattern instead of reading input
  std::string source;   // raw | oms; empty keeps the configured value
  int csv_width = 128;
  int csv_height = 128;
};

struct BenchOptions {
  std::string dataset_root;
  bool self_check = false;
  int csv_width = 128;
  int csv_height = 128;
};

struct DemoOptions {
  std::string scene;
  int iterations = -1;  // < 0 keeps the configured value
};

int cmd_characterize(RunContext& ctx, const CharacterizeOptions& opt);
int cmd_segment(RunContext& ctx, const SegmentOptions& opt);
int cmd_saliency(RunContext& ctx, const SaliencyOptions& opt);
int cmd_bench(RunContext& ctx, const BenchOptions& opt);
int cmd_demo(RunContext& ctx, const DemoOptions& opt);

}  // namespace foveate::cli
