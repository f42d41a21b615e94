#include "opdyn/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace opdyn {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  if (tr.states.empty()) return;
  const Index n = tr.states.front().size();
  const Index d = tr.states.front().dim();
  os << 't';
  for (Index i = 1; i <= n; ++i) {
    if (d == 1) {
      os << ",x_" << i;
    } else {
      for (Index c = 1; c <= d; ++c) os << ",x_" << i << '_' << c;
    }
  }
  for (Index i = 1; i <= n; ++i) os << ",m_" << i;
  os << '\n';
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const AgentEnsemble& e = tr.states[k];
    os << format_double(tr.times[k]);
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < d; ++c) os << ',' << format_double(e.positions(c, i));
    for (Index i = 0; i < n; ++i) os << ',' << format_double(e.weights[i]);
    os << '\n';
  }
}

void write_fields_csv(std::ostream& os, const std::vector<FieldPair>& states) {
  os << "t,s,x,m\n";
  for (const FieldPair& fp : states) {
    const Index n = fp.cells();
    for (Index i = 0; i < n; ++i) {
      os << format_double(fp.time) << ',' << format_double(cell_center(i, n)) << ','
         << format_double(fp.x.cell(i)[0]) << ',' << format_double(fp.m.cell(i)[0]) << '\n';
    }
  }
}

void write_measures_csv(std::ostream& os, const std::vector<std::pair<double, ParticleMeasure>>& measures) {
  os << "t,location,mass\n";
  for (const auto& [t, pm] : measures) {
    for (Index a = 0; a < pm.size(); ++a) {
      os << format_double(t) << ',' << format_double(pm.locations()(0, a)) << ',' << format_double(pm.masses()[a])
         << '\n';
    }
  }
}

void write_densities_csv(std::ostream& os, const std::vector<DensityGrid>& grids) {
  os << "t,x_center,density\n";
  for (const DensityGrid& g : grids) {
    for (Index j = 0; j < g.cells(); ++j) {
      os << format_double(g.time) << ',' << format_double(g.center(j)) << ',' << format_double(g.density[j]) << '\n';
    }
  }
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

}  // namespace opdyn
