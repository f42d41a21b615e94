#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "opdyn/graph_solver.hpp"
#include "opdyn/measure.hpp"
#include "opdyn/micro_solver.hpp"

namespace opdyn {

/// 17 significant digits, '.' decimal point, independent of the global locale.
std::string format_double(double v);

/// Header `t,x_1..x_N,m_1..m_N`, one row per sample.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

/// Header `t,s,x,m`; one block per sample time, cells ascending in s (s = cell centre).
void write_fields_csv(std::ostream& os, const std::vector<FieldPair>& states);

/// Header `t,location,mass`; atoms in canonical order.
void write_measures_csv(std::ostream& os, const std::vector<std::pair<double, ParticleMeasure>>& measures);

/// Header `t,x_center,density`; one block per grid.
void write_densities_csv(std::ostream& os, const std::vector<DensityGrid>& grids);

/// Opens `path` in binary mode (LF line endings) or throws Error.
std::ofstream open_csv(const std::filesystem::path& path);

}  // namespace opdyn
