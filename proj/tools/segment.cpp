#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "foveate/image_io.hpp"
#include "foveate/oms.hpp"

namespace foveate::cli {

int cmd_segment(RunContext& ctx, const SegmentOptions& opt) {
  const OmsConfig oms = OmsConfig::from_config(ctx.config());
  ctx.reject_unknown();
  KeyValueConfig resolved;
  oms.to_config(resolved);
  resolved.set("segment.input", opt.input);
  ctx.record(resolved);

  const EventStream stream = load_event_input(opt.input, {opt.csv_width, opt.csv_height});
  const auto window = static_cast<std::uint64_t>(std::llround(oms.update_interval * 1e6));
  const AccumulateResult acc = accumulate(stream.events, window, stream.geometry);
  if (acc.rejected > 0) {
    std::cerr << "segment: " << acc.rejected << " events outside " << to_string(stream.geometry)
              << " dropped\n";
  }

  OmsStage stage(oms, stream.geometry);
  std::vector<SuppressionStats> stats;
  std::ofstream csv(ctx.output("suppression.csv"));
  csv << "slice,window_start_us,window_end_us,input_events,output_events,suppression_fraction\n";
  for (std::size_t k = 0; k < acc.slices.size(); ++k) {
    const EventSlice& slice = acc.slices[k];
    const OmsMap map = stage.step(slice).map;
    const SuppressionStats s = suppression_stats(slice, map);
    stats.push_back(s);
    char name[48];
    std::snprintf(name, sizeof name, "masks/mask_%05zu.pgm", k);
    save_mask_pgm(ctx.output(name), map.mask);
    csv << k << ',' << slice.window_start() << ',' << slice.window_end() << ',' << s.input_events
        << ',' << s.output_events << ',' << format_number(s.suppression_fraction) << '\n';
  }
  std::cout << acc.slices.size() << " slices, mean suppression "
            << format_number(mean_suppression(stats)) << '\n';
  return kExitOk;
}

}  // namespace foveate::cli
