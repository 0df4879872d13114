#pragma once

// JSON and CSV serialization of reports, traces and oracle results.

#include "diva/functional.hpp"
#include "diva/oracle.hpp"
#include "diva/soft.hpp"
#include "diva/solver.hpp"

#include <json.hpp>

#include <iosfwd>

namespace diva {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

void to_json(nlohmann::json& j, const EnergyReport& r);
void to_json(nlohmann::json& j, const DivaRecord& r);
void to_json(nlohmann::json& j, const DivaTrace& t);
void to_json(nlohmann::json& j, const FciResult& r);
void to_json(nlohmann::json& j, const SoftRecord& r);

nlohmann::json matrix_json(const Matrix& m);

/// Columns: iter,energy,delta_energy,delta_rdm,mu
void write_trace_csv(std::ostream& out, const DivaTrace& trace);

}  // namespace diva
