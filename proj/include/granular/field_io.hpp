// CSV persistence for hydrodynamic field time series.
//
// Header `t,x_center,rho,u,theta`, one row per cell per snapshot, every value
// printed with %.12e.

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "granular/core_types.hpp"

namespace granular {

/// %.12e rendering used by every CSV payload.
std::string csv_number(double value);

void write_fields_csv(std::ostream& out, std::span<const HydroField> series);
void write_fields_csv(const std::string& path, std::span<const HydroField> series);

/// Rows are grouped into snapshots by their t column (in file order). The
/// grid of each snapshot is reconstructed from consecutive cell centres; a
/// single-cell snapshot gets dx = 0.
std::vector<HydroField> read_fields_csv(const std::string& path);

}  // namespace granular
