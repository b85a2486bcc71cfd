#include "granular/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace granular {

std::string csv_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", value);
  return buf;
}

void write_fields_csv(std::ostream& out, std::span<const HydroField> series) {
  out << "t,x_center,rho,u,theta\n";
  for (const HydroField& f : series) {
    const std::string t = csv_number(f.time);
    for (std::size_t c = 0; c < f.grid.n_cells; ++c) {
      out << t << ',' << csv_number(f.grid.cell_center(c)) << ',' << csv_number(f.rho[c]) << ','
          << csv_number(f.u[c]) << ',' << csv_number(f.theta[c]) << '\n';
    }
  }
}

void write_fields_csv(const std::string& path, std::span<const HydroField> series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_fields_csv(out, series);
}

std::vector<HydroField> read_fields_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fields file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,x_center,rho,u,theta", 0) != 0) {
    throw ConfigError(path + ": missing header t,x_center,rho,u,theta");
  }
  struct Row {
    double t, x, rho, u, theta;
  };
  std::vector<std::vector<Row>> groups;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Row r{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &r.t, &r.x, &r.rho, &r.u, &r.theta) != 5) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (groups.empty() || groups.back().front().t != r.t) groups.emplace_back();
    groups.back().push_back(r);
  }

  std::vector<HydroField> out;
  for (const auto& rows : groups) {
    HydroField f;
    f.time = rows.front().t;
    const double dx = rows.size() > 1 ? (rows.back().x - rows.front().x) / static_cast<double>(rows.size() - 1) : 0.0;
    f.grid.dx = dx;
    f.grid.n_cells = rows.size();
    f.grid.first_cell = 0;
    f.grid.origin = rows.front().x - 0.5 * dx;
    for (const Row& r : rows) {
      f.rho.push_back(r.rho);
      f.u.push_back(r.u);
      f.theta.push_back(r.theta);
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace granular
