#include "diva/io.hpp"

#include <cstdio>
#include <ostream>

namespace diva {

void to_json(nlohmann::json& j, const EnergyReport& r) {
  j = {{"total", r.total},
       {"one_body", r.one_body},
       {"interaction", r.interaction},
       {"core", r.core},
       {"mu", r.mu},
       {"double_occupation", r.double_occupation}};
}

void to_json(nlohmann::json& j, const DivaRecord& r) {
  j = {{"iter", r.iter},
       {"energy", r.energy},
       {"delta_energy", r.delta_energy},
       {"delta_rdm", r.delta_rdm},
       {"mu", r.mu},
       {"n_boundary_members", r.n_boundary_members},
       {"weights", r.weights}};
}

void to_json(nlohmann::json& j, const DivaTrace& t) { j = t.records; }

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[k] = m(i, k);
    rows.push_back(row);
  }
  return rows;
}

void to_json(nlohmann::json& j, const FciResult& r) {
  j = {{"energy", r.energy},
       {"dimension", r.dimension},
       {"double_occ", r.double_occ},
       {"one_rdm", {matrix_json(r.one_rdm.block(0)), matrix_json(r.one_rdm.block(1))}}};
}

void to_json(nlohmann::json& j, const SoftRecord& r) {
  j = {{"iter", r.iter},
       {"energy", r.energy},
       {"dv", r.dv},
       {"mu_pks", r.mu_pks},
       {"inner_iterations", r.inner_iterations}};
}

void write_trace_csv(std::ostream& out, const DivaTrace& trace) {
  out << "iter,energy,delta_energy,delta_rdm,mu\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%d,%.15g,%.6e,%.6e,%.15g\n", r.iter, r.energy, r.delta_energy, r.delta_rdm, r.mu);
    out << buf;
  }
}

}  // namespace diva
