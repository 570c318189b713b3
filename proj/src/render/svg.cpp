#include "grft/render/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace grft {

namespace {

const char* kLaneFill = "#d0d0d0";
const char* kLaneStroke = "#909090";
const char* kRouteFill = "#c4d4ec";
const char* kOrange = "#ff8c00";
const char* kBlue = "#1f5fd6";
const char* kGroupColors[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                              "#911eb4", "#42d4f4", "#f032e6", "#9a6324"};

class Canvas {
 public:
  Canvas(double cx, double cy, const RenderOptions& opt)
      : x0_(cx - 0.5 * opt.extent), y1_(cy + 0.5 * opt.extent), s_(opt.pixels_per_meter) {}

  std::string point(const Vec2& p) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", (p.x() - x0_) * s_, (y1_ - p.y()) * s_);
    return buf;
  }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out += ' ';
      out += point(pts[i]);
    }
    return out;
  }

 private:
  double x0_, y1_, s_;
};

std::vector<Vec2> positions(const Trajectory& t) {
  std::vector<Vec2> out;
  for (const auto& w : t.points) out.push_back(w.position());
  return out;
}

void polygon(std::string& out, const Canvas& c, const std::vector<Vec2>& pts, const char* cls, const char* fill,
             const char* stroke) {
  out += "<polygon class=\"";
  out += cls;
  out += "\" points=\"" + c.points(pts) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

void polyline(std::string& out, const Canvas& c, const std::vector<Vec2>& pts, const char* cls, const char* stroke,
              double width, const char* extra = "") {
  if (pts.size() < 2) return;
  char w[32];
  std::snprintf(w, sizeof w, "%.2f", width);
  out += "<polyline class=\"";
  out += cls;
  out += "\" points=\"" + c.points(pts) + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + w + "\"";
  out += extra;
  out += "/>\n";
}

}  // namespace

std::string render_frame(const Scenario& s, std::size_t frame, const RenderOverlays& ov, const RenderOptions& opt) {
  if (frame >= s.frame_count()) throw std::out_of_range("render_frame: frame outside the scenario");
  const EgoState ego = ov.ego.value_or(s.ego_log[frame]);
  const Canvas c(ego.x, ego.y, opt);
  const double size = opt.extent * opt.pixels_per_meter;
  char head[256];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                size, size, size, size);
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += head;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  out += "<g id=\"lanes\">\n";
  for (const auto& lane : s.lanes) {
    const bool on_route = std::find(s.route.begin(), s.route.end(), lane.id) != s.route.end();
    polygon(out, c, lane.polygon, on_route ? "lane route" : "lane", on_route ? kRouteFill : kLaneFill, kLaneStroke);
  }
  for (const auto& lane : s.lanes) polyline(out, c, lane.centerline, "centerline", kLaneStroke, 0.5, " stroke-dasharray=\"4 4\"");
  out += "</g>\n";

  out += "<g id=\"statics\">\n";
  for (const auto& b : s.statics) polygon(out, c, b.corners(), "static", "#d62728", "#7f0000");
  out += "</g>\n<g id=\"agents\">\n";
  for (const auto& a : s.agents) {
    if (frame < a.poses.size() && a.poses[frame].valid) polygon(out, c, a.box_at(frame).corners(), "agent", "#000000", "#000000");
  }
  out += "</g>\n";

  if (opt.show_expert) {
    std::vector<Vec2> future;
    for (std::size_t f = frame; f < s.frame_count(); ++f) future.push_back(s.ego_log[f].position());
    polyline(out, c, future, "expert", kBlue, 2.0);
  }
  if (!ov.trace.empty()) {
    std::vector<Vec2> pts;
    for (const auto& e : ov.trace) pts.push_back(e.position());
    polyline(out, c, pts, "trace", kOrange, 1.0, " stroke-dasharray=\"2 2\"");
  }
  if (!ov.group.empty()) {
    out += "<g id=\"group\">\n";
    for (std::size_t i = 0; i < ov.group.size(); ++i)
      polyline(out, c, positions(ov.group[i]), "group", kGroupColors[i % 8], 1.2, " stroke-opacity=\"0.8\"");
    out += "</g>\n";
  }
  if (ov.reference) polyline(out, c, positions(*ov.reference), "reference", "#606060", 1.5, " stroke-dasharray=\"6 3\"");
  if (ov.plan) polyline(out, c, positions(*ov.plan), "plan", kOrange, 2.5);

  const OrientedBox box{ego.position(), ego.heading, opt.ego_length, opt.ego_width};
  polygon(out, c, box.corners(), "ego", kOrange, "#a05000");
  out += "</svg>\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace grft
