#include <doctest.h>

#include <clocale>
#include <cstdlib>
#include <sstream>

#include "extrudesim/io.hpp"
#include "extrudesim/svg.hpp"

using namespace extrude;

TEST_CASE("number formatting round-trips and ignores the locale") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, 123456789.123456789}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("trajectory CSV layout") {
  Trajectory traj(2);
  traj[0] = {0.0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  traj[1] = traj[0];
  traj[1].t = 0.001;
  std::ostringstream o;
  write_trajectory_csv(o, traj);
  std::istringstream in(o.str());
  std::string header, row0, row1, extra;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(header == "t,x1,x1r,x2,x2r,u1,u2,u_cancel,u_sm,u_opt,eta1,eta2,s,W1,W2");
  CHECK(row0 == "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14");
  CHECK(row1.rfind("0.001,", 0) == 0);
  CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("metrics JSON keeps absent reach times as null") {
  Metrics m;
  m.reach_time_s = 1.5;
  const auto j = metrics_to_json(m);
  CHECK(j["reach_time_1"].is_null());
  CHECK(j["reach_time_s"] == 1.5);
  CHECK(j.contains("cost_J"));
}

TEST_CASE("SVG output is self-contained") {
  const std::string line = svg::line_chart({{"a<b", {0, 1, 2}, {0, 1, 0}}}, {});
  CHECK(line.rfind("<svg", 0) == 0);
  CHECK(line.find("</svg>") != std::string::npos);
  CHECK(line.find("a&lt;b") != std::string::npos);
  CHECK(line.find("href") == std::string::npos);
  const std::string heat = svg::heatmap({{1, 2}, {3, NAN}}, {1, 10}, {0.1, 1}, {});
  CHECK(heat.find("n/a") != std::string::npos);
  CHECK(heat.find("</svg>") != std::string::npos);
}
