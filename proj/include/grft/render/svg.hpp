#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grft/core/types.hpp"
#include "grft/scenario/scenario.hpp"

namespace grft {

struct RenderOptions {
  double pixels_per_meter = 6.0;
  double extent = 120.0;  // [m] square window centred on the ego
  bool show_expert = true;
  double ego_length = 4.6;
  double ego_width = 2.0;
};

/// World-frame overlays. `ego` replaces the logged ego pose at the frame (closed-loop renders).
struct RenderOverlays {
  std::optional<EgoState> ego;
  std::optional<Trajectory> plan;
  std::optional<Trajectory> reference;
  std::vector<Trajectory> group;
  std::vector<EgoState> trace;
};

/// SVG document for one frame. Lanes gray, route lanes tinted, ego and plan orange, agents black,
/// statics red, expert future blue, group members as thin polylines of class "group".
/// Output depends only on the inputs (fixed number formatting, no timestamps).
std::string render_frame(const Scenario& s, std::size_t frame, const RenderOverlays& overlays = {},
                         const RenderOptions& opt = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace grft
