#include "swarm/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "swarm/analysis.hpp"
#include "swarm/errors.hpp"

namespace swarm::io {

namespace {

constexpr double kCanvas = 1000.0;
constexpr double kPad = 60.0;

const char* kPalette[] = {"#3366cc", "#dc3912", "#ff9900", "#109618", "#990099",
                          "#0099c6", "#dd4477", "#66aa00", "#b82e2e", "#316395"};

struct Window {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void include(double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  void pad() {
    const double dx = std::max(1e-12, 0.05 * (xmax - xmin) + 1e-9);
    const double dy = std::max(1e-12, 0.05 * (ymax - ymin) + 1e-9);
    xmin -= dx;
    xmax += dx;
    ymin -= dy;
    ymax += dy;
  }
  double px(double x) const { return kPad + (x - xmin) / (xmax - xmin) * (kCanvas - 2 * kPad); }
  double py(double y) const {
    return kCanvas - kPad - (y - ymin) / (ymax - ymin) * (kCanvas - 2 * kPad);
  }
};

class SvgFile {
 public:
  explicit SvgFile(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw InputError("cannot open " + path.string() + " for writing");
  }
  void open(const Window& w, const char* kind) {
    char head[512];
    std::snprintf(head, sizeof(head),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"1000\" "
                  "viewBox=\"0 0 1000 1000\" data-kind=\"%s\" data-xmin=\"%.9g\" "
                  "data-xmax=\"%.9g\" data-ymin=\"%.9g\" data-ymax=\"%.9g\">\n",
                  kind, w.xmin, w.xmax, w.ymin, w.ymax);
    out_ << head;
    out_ << "<rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"#ffffff\"/>\n";
  }
  void polyline(const std::vector<double>& px, const std::vector<double>& py,
                const char* cls, const char* color, double width) {
    out_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"" << width << "\" points=\"";
    char buf[64];
    for (std::size_t i = 0; i < px.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px[i], py[i]);
      out_ << buf;
    }
    out_ << "\"/>\n";
  }
  void circle(double cx, double cy, double radius, const char* cls, const char* color) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "<circle class=\"%s\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n",
                  cls, cx, cy, radius, color);
    out_ << buf;
  }
  void close() { out_ << "</svg>\n"; }

 private:
  std::ofstream out_;
};

void curve_svg(const std::filesystem::path& path, const char* kind,
               const std::vector<double>& t, const std::vector<double>& value,
               const char* cls) {
  if (t.empty()) throw InputError("nothing to plot: empty series");
  Window w;
  for (std::size_t i = 0; i < t.size(); ++i) w.include(t[i], value[i]);
  w.pad();
  SvgFile svg(path);
  svg.open(w, kind);
  std::vector<double> px(t.size()), py(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    px[i] = w.px(t[i]);
    py[i] = w.py(value[i]);
  }
  svg.polyline(px, py, cls, kPalette[0], 1.5);
  svg.close();
}

}  // namespace

void write_traces_svg(const std::filesystem::path& path, const model::Model& m,
                      const integrate::Trajectory& traj, double window_fraction) {
  if (traj.size() == 0) throw InputError("nothing to plot: empty trajectory");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  const double cut = t1 - window_fraction * (t1 - t0);
  std::size_t start = 0;
  while (start + 1 < traj.size() && traj.times[start] < cut) ++start;

  const bool planar = m.d >= 2;
  const linalg::Matrix q = m.is_linear()
                               ? m.linear().projection.Q
                               : linalg::Matrix(m.n, m.n, 1.0 / static_cast<double>(m.n));

  // Agent coordinates and the center path in data space.
  std::vector<std::vector<double>> ax(m.n), ay(m.n);
  std::vector<double> cx, cy;
  Window w;
  for (std::size_t i = start; i < traj.size(); ++i) {
    const auto s = model::unpack_swarm(traj.times[i], traj.states[i], m.n, m.d);
    const linalg::Matrix center = q * s.r;
    double ccx = 0.0, ccy = 0.0;
    for (std::size_t k = 0; k < m.n; ++k) {
      const double x = planar ? s.r(k, 0) : s.t;
      const double y = planar ? s.r(k, 1) : s.r(k, 0);
      ax[k].push_back(x);
      ay[k].push_back(y);
      w.include(x, y);
      ccx += planar ? center(k, 0) : s.t;
      ccy += planar ? center(k, 1) : center(k, 0);
    }
    cx.push_back(ccx / static_cast<double>(m.n));
    cy.push_back(ccy / static_cast<double>(m.n));
    w.include(cx.back(), cy.back());
  }
  w.pad();

  SvgFile svg(path);
  svg.open(w, "traces");
  std::vector<double> px, py;
  for (std::size_t k = 0; k < m.n; ++k) {
    px.resize(ax[k].size());
    py.resize(ax[k].size());
    for (std::size_t i = 0; i < ax[k].size(); ++i) {
      px[i] = w.px(ax[k][i]);
      py[i] = w.py(ay[k][i]);
    }
    svg.polyline(px, py, "agent", kPalette[k % 10], 1.0);
  }
  px.resize(cx.size());
  py.resize(cx.size());
  for (std::size_t i = 0; i < cx.size(); ++i) {
    px[i] = w.px(cx[i]);
    py[i] = w.py(cy[i]);
  }
  svg.polyline(px, py, "center", "#222222", 2.0);
  for (std::size_t k = 0; k < m.n; ++k)
    svg.circle(w.px(ax[k].back()), w.py(ay[k].back()), 4.0, "agent-dot", kPalette[k % 10]);
  svg.close();
}

void write_lyapunov_svg(const std::filesystem::path& path,
                        const certify::LyapunovTrace& trace) {
  curve_svg(path, "lyapunov", trace.t, trace.value, "lyapunov");
}

void write_energy_svg(const std::filesystem::path& path, const std::vector<double>& t,
                      const std::vector<double>& drift) {
  curve_svg(path, "energy", t, drift, "energy-drift");
}

}  // namespace swarm::io
