#include "diva/cli.hpp"

#include "diva/errors.hpp"
#include "diva/io.hpp"
#include "diva/log.hpp"
#include "diva/model.hpp"
#include "diva/oracle.hpp"
#include "diva/parallel.hpp"
#include "diva/soft.hpp"
#include "diva/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace diva::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string num(double x) {
  if (!std::isfinite(x)) return {};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string tag(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Common {
  std::string config;
  std::string output_dir = ".";
  std::string format = "csv";
  unsigned seed = 12345;
  int jobs = 1;
};

struct SolverFlags {
  std::string functional = "mueller";
  std::string mode = "mono";
  std::string direction = "cg";
  double energy_tol = 1e-8;
  double rdm_tol = 1e-5;
  double bracket_tol = 1e-10;
  double fd_step = 1e-5;
  int max_iters = 200;

  DivaConfig config() const {
    DivaConfig c;
    if (mode == "mono")
      c.mode = DivaMode::Mono;
    else if (mode == "multi")
      c.mode = DivaMode::Multi;
    else
      throw UsageError("--mode must be mono or multi");
    if (direction == "sd")
      c.direction = DirectionKind::SteepestDescent;
    else if (direction == "cg")
      c.direction = DirectionKind::ConjugateGradient;
    else
      throw UsageError("--direction must be sd or cg");
    c.energy_tol = energy_tol;
    c.rdm_tol = rdm_tol;
    c.bracket_tol = bracket_tol;
    c.max_iters = max_iters;
    c.validate();
    return c;
  }

  FunctionalSpec spec() const {
    FunctionalSpec s;
    try {
      s.kind = parse_functional_kind(functional);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    s.fd_step = fd_step;
    return s;
  }
};

struct LatticeFlags {
  int sites = 202;
  double t = 1.0;
  bool open = false;
  std::string u_list = "1,4,8";
};

struct SoftFlags {
  int max_outer = 100;
  double mixing = 1.0;
  int anderson_depth = 0;

  SoftConfig config() const { return {max_outer, mixing, anderson_depth}; }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value file; command-line flags take precedence");
  app->add_option("--output-dir", c.output_dir, "directory for output files");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seed", c.seed, "seed of the exact-diagonalization start vector");
  app->add_option("--jobs", c.jobs, "worker threads for independent points")->check(CLI::PositiveNumber);
}

void add_solver(CLI::App* app, SolverFlags& s, bool with_mode) {
  app->add_option("--functional", s.functional, "hf | mueller | tp");
  if (with_mode) app->add_option("--mode", s.mode, "mono | multi");
  app->add_option("--direction", s.direction, "sd | cg");
  app->add_option("--energy-tol", s.energy_tol, "energy convergence threshold");
  app->add_option("--rdm-tol", s.rdm_tol, "1-RDM step threshold (Frobenius)");
  app->add_option("--bracket-tol", s.bracket_tol, "boundary bracketing tolerance on the pseudo-distance");
  app->add_option("--fd-step", s.fd_step, "finite-difference step of numerical gradients");
  app->add_option("--max-iters", s.max_iters, "DIVA iteration cap");
}

void add_lattice(CLI::App* app, LatticeFlags& l) {
  app->add_option("--sites", l.sites, "chain length L")->check(CLI::Range(2, 100000));
  app->add_option("--t", l.t, "hopping amplitude");
  app->add_option("--u-list", l.u_list, "comma list or start:stop:step of U values");
  app->add_flag("--open", l.open, "open chain instead of periodic");
}

void add_soft(CLI::App* app, SoftFlags& s) {
  app->add_option("--max-outer", s.max_outer, "SOFT outer iteration cap");
  app->add_option("--mixing", s.mixing, "linear mixing of the Hxc potential");
  app->add_option("--anderson-depth", s.anderson_depth, "Anderson history length (0 = linear mixing)");
}

// Resolved option values of a subcommand, sorted by name.
std::map<std::string, std::string> resolved_flags(const CLI::App* app) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* o : app->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value;
    if (o->get_expected_max() == 0 || (o->count() == 0 && o->get_default_str().empty())) {
      value = o->count() > 0 ? "true" : "false";
    } else if (o->count() > 0) {
      for (const auto& r : o->reduced_results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = o->get_default_str();
    }
    out[name] = value;
  }
  return out;
}

struct Header {
  std::string command;
  std::map<std::string, std::string> flags;
  std::map<std::string, double> tolerances;

  void write_csv(std::ostream& os) const {
    os << "# diva " << kVersion << " schema " << kSchemaVersion << '\n';
    os << "# command: " << command << '\n';
    os << "# flags:";
    for (const auto& [k, v] : flags) os << ' ' << k << '=' << v;
    os << "\n# tolerances:";
    for (const auto& [k, v] : tolerances) os << ' ' << k << '=' << tag(v);
    os << '\n';
  }

  json to_json() const {
    json j;
    j["schema"] = kSchemaVersion;
    j["version"] = kVersion;
    j["command"] = command;
    j["flags"] = flags;
    j["tolerances"] = tolerances;
    return j;
  }
};

std::map<std::string, double> tolerances(const SolverFlags& s) {
  return {{"energy_tol", s.energy_tol}, {"rdm_tol", s.rdm_tol}, {"bracket_tol", s.bracket_tol}, {"fd_step", s.fd_step}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

fs::path prepare_output(const Common& c) {
  if (c.jobs < 1) throw UsageError("--jobs must be positive");
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + c.output_dir);
  return dir;
}

std::vector<double> grid_flag(const std::string& text, const char* name) {
  try {
    auto v = parse_grid(text);
    if (v.empty()) throw UsageError(std::string(name) + " is empty");
    return v;
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(name) + ": " + e.what());
  }
}

LatticeSpec lattice_spec(const LatticeFlags& l, double u, double n) {
  if (!std::isfinite(l.t)) throw UsageError("--t must be finite");
  if (!std::isfinite(u) || u < 0.0) throw UsageError("U values must be finite and nonnegative");
  LatticeSpec s{l.sites, l.t, u, !l.open, n};
  try {
    electrons_per_spin(s);
  } catch (const FillingError& e) {
    throw UsageError(e.what());
  }
  return s;
}

struct ScanPoint {
  double u = 0.0;
  double n = 0.0;
  double e = kNaN;
  int iters = 0;
  bool converged = false;
  std::string status;
  double tb = kNaN;
  double fci = kNaN;
  double bethe = kNaN;
  std::vector<BlochPoint> bloch;
};

int cmd_hubbard_scan(const CLI::App* app, const Common& c, const SolverFlags& s, const LatticeFlags& l,
                     const std::string& fillings_text, std::int64_t fci_max_dim, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  const auto us = grid_flag(l.u_list, "--u-list");
  const auto fillings = grid_flag(fillings_text, "--fillings");
  const DivaConfig cfg = s.config();
  const FunctionalSpec spec = s.spec();
  std::vector<ScanPoint> points;
  for (double u : us)
    for (double n : fillings) {
      lattice_spec(l, u, n);
      points.emplace_back();
      points.back().u = u;
      points.back().n = n;
    }

  auto run_point = [&](std::size_t i) {
    ScanPoint p = points[i];
    const LatticeSpec ls = lattice_spec(l, p.u, p.n);
    const double len = ls.n_sites;
    try {
      const ManyBodyModel model = build_hubbard(ls);
      const DivaResult r = diva_run(model, spec, cfg);
      p.e = r.report.total / len;
      p.iters = r.iterations;
      p.converged = r.converged;
      p.status = r.status;
      p.tb = tight_binding_energy(ls) / len;
      if (fci_dimension(model) <= fci_max_dim) p.fci = fci_ground_state(model, c.seed).energy / len;
      if (ls.periodic && std::abs(p.n - 1.0) < 1e-12) p.bethe = ls.hopping * lieb_wu_half_filling(p.u / ls.hopping);
    } catch (const std::exception& e) {
      p.status = std::string("error: ") + e.what();
    }
    return p;
  };
  points = parallel_map(points.size(), c.jobs, run_point);

  const Header header{"hubbard-scan", resolved_flags(app), tolerances(s)};
  bool all_converged = true;
  for (double u : us) {
    const std::string stem = "hubbard_scan_" + std::string(to_string(spec.kind)) + "_L" + std::to_string(l.sites) +
                             "_U" + tag(u);
    std::ostringstream os;
    json rows = json::array();
    for (const auto& p : points) {
      if (p.u != u) continue;
      all_converged = all_converged && p.converged;
      if (c.format == "csv") {
        os << num(p.n) << ',' << num(p.e) << ',' << p.iters << ',' << (p.converged ? 1 : 0) << ",\"" << p.status
           << "\"," << num(p.tb) << ',' << num(p.fci) << ',' << num(p.bethe) << '\n';
      } else {
        rows.push_back({{"n", p.n},
                        {"E_per_site", num_json(p.e)},
                        {"iters", p.iters},
                        {"converged", p.converged},
                        {"status", p.status},
                        {"E_tb_per_site", num_json(p.tb)},
                        {"E_fci_per_site", num_json(p.fci)},
                        {"E_bethe_per_site", num_json(p.bethe)}});
      }
    }
    if (c.format == "csv") {
      std::ostringstream file;
      header.write_csv(file);
      file << "n,E_per_site,iters,converged,status,E_tb_per_site,E_fci_per_site,E_bethe_per_site\n" << os.str();
      write_file(dir / (stem + ".csv"), file.str());
      out << (dir / (stem + ".csv")).string() << '\n';
    } else {
      json j = header.to_json();
      j["U"] = u;
      j["rows"] = rows;
      write_file(dir / (stem + ".json"), j.dump(2) + "\n");
      out << (dir / (stem + ".json")).string() << '\n';
    }
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_momentum(const CLI::App* app, const Common& c, const SolverFlags& s, const LatticeFlags& l, double filling,
                 std::ostream& out) {
  const fs::path dir = prepare_output(c);
  if (l.open) throw UsageError("momentum distributions need a periodic chain");
  const auto us = grid_flag(l.u_list, "--u-list");
  const DivaConfig cfg = s.config();
  const FunctionalSpec spec = s.spec();
  std::vector<ScanPoint> points;
  for (double u : us) {
    lattice_spec(l, u, filling);
    points.emplace_back();
    points.back().u = u;
    points.back().n = filling;
  }
  auto run_point = [&](std::size_t i) {
    ScanPoint p = points[i];
    const LatticeSpec ls = lattice_spec(l, p.u, p.n);
    try {
      const ManyBodyModel model = build_hubbard(ls);
      const DivaResult r = diva_run(model, spec, cfg);
      p.e = r.report.total / ls.n_sites;
      p.iters = r.iterations;
      p.converged = r.converged;
      p.status = r.status;
      p.bloch = bloch_occupations(r.gamma, ls);
      std::sort(p.bloch.begin(), p.bloch.end(), [](const BlochPoint& a, const BlochPoint& b) { return a.k < b.k; });
    } catch (const std::exception& e) {
      p.converged = false;
      p.status = std::string("error: ") + e.what();
    }
    return p;
  };
  points = parallel_map(points.size(), c.jobs, run_point);

  const Header header{"momentum", resolved_flags(app), tolerances(s)};
  bool all_converged = true;
  for (const auto& p : points) {
    all_converged = all_converged && p.converged;
    const std::string stem = "momentum_" + std::string(to_string(spec.kind)) + "_L" + std::to_string(l.sites) + "_n" +
                             tag(filling) + "_U" + tag(p.u);
    if (c.format == "csv") {
      std::ostringstream file;
      header.write_csv(file);
      file << "# U=" << tag(p.u) << " E_per_site=" << num(p.e) << " iters=" << p.iters
           << " converged=" << (p.converged ? 1 : 0) << " status=\"" << p.status << "\"\n";
      file << "k,eta_up,eta_down\n";
      for (const auto& b : p.bloch) file << num(b.k) << ',' << num(b.eta[0]) << ',' << num(b.eta[1]) << '\n';
      write_file(dir / (stem + ".csv"), file.str());
      out << (dir / (stem + ".csv")).string() << '\n';
    } else {
      json j = header.to_json();
      j["U"] = p.u;
      j["E_per_site"] = num_json(p.e);
      j["iters"] = p.iters;
      j["converged"] = p.converged;
      j["status"] = p.status;
      json rows = json::array();
      for (const auto& b : p.bloch) rows.push_back({{"k", b.k}, {"eta_up", b.eta[0]}, {"eta_down", b.eta[1]}});
      j["rows"] = rows;
      write_file(dir / (stem + ".json"), j.dump(2) + "\n");
      out << (dir / (stem + ".json")).string() << '\n';
    }
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_vxc(const CLI::App* app, const Common& c, const SolverFlags& s, const LatticeFlags& l, const SoftFlags& sf,
            const std::string& fillings_text, std::ostream& out) {
  const fs::path dir = prepare_output(c);
  if (l.open) throw UsageError("v_xc extraction needs a periodic chain");
  const auto us = grid_flag(l.u_list, "--u-list");
  const auto fillings = grid_flag(fillings_text, "--fillings");
  const DivaConfig cfg = s.config();
  const FunctionalSpec spec = s.spec();
  const SoftConfig soft = sf.config();
  if (!(soft.mixing > 0.0 && soft.mixing <= 1.0)) throw UsageError("--mixing must lie in (0, 1]");
  if (soft.max_outer < 1 || soft.anderson_depth < 0) throw UsageError("invalid SOFT iteration settings");
  for (double u : us)
    for (double n : fillings) lattice_spec(l, u, n);

  const Header header{"vxc", resolved_flags(app), tolerances(s)};
  bool all_converged = true;
  for (double u : us) {
    const LatticeSpec ls = lattice_spec(l, u, fillings.front());
    const auto rows = vxc_extract(spec, cfg, ls, fillings, soft, c.jobs);
    for (const auto& r : rows) all_converged = all_converged && r.converged && r.error.empty();
    const std::string stem = "vxc_" + std::string(to_string(spec.kind)) + "_L" + std::to_string(l.sites) + "_U" + tag(u);
    if (c.format == "csv") {
      std::ostringstream file;
      header.write_csv(file);
      write_vxc_csv(file, rows, spec);
      write_file(dir / (stem + ".csv"), file.str());
      out << (dir / (stem + ".csv")).string() << '\n';
    } else {
      json j = header.to_json();
      j["U"] = u;
      j["gauge"] = "v_xc(n->0) = 0";
      j["hartree_convention"] = "V_H = U*n/2 per spin";
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"n", r.n},
                       {"v_xc", r.v_xc},
                       {"gauge_shift", r.gauge_shift},
                       {"v_hxc_mean", r.v_hxc_mean},
                       {"mu_pks", r.mu_pks},
                       {"converged", r.converged},
                       {"error", r.error}});
      j["rows"] = arr;
      write_file(dir / (stem + ".json"), j.dump(2) + "\n");
      out << (dir / (stem + ".json")).string() << '\n';
    }
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

std::vector<double> descending(const Vector& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

struct MoleculeRun {
  std::string label;
  fs::path path;
  json result;
  bool converged = false;
  double energy = kNaN;
  int iterations = 0;
  std::string status;
  DivaTrace trace;
  std::vector<double> eta;
};

int cmd_molecule(const CLI::App* app, const Common& c, const SolverFlags& s, const SoftFlags& sf,
                 const std::string& input, const std::string& algorithm, std::int64_t fci_max_dim,
                 std::ostream& out) {
  const fs::path dir = prepare_output(c);
  if (algorithm != "mono" && algorithm != "multi" && algorithm != "soft")
    throw UsageError("--algorithm must be mono, multi or soft");
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input))
      if (entry.is_regular_file() && entry.path().extension() == ".fcidump") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no .fcidump files in " + input);
  } else if (fs::is_regular_file(input)) {
    files.push_back(input);
  } else {
    throw UsageError("--fcidump path does not exist: " + input);
  }
  SolverFlags solver = s;
  solver.mode = algorithm == "multi" ? "multi" : "mono";
  DivaConfig cfg = solver.config();
  const FunctionalSpec spec = s.spec();
  if (spec.kind == FunctionalKind::ToewsPastor) throw UsageError("molecular runs support hf and mueller only");
  const SoftConfig soft = sf.config();

  std::vector<ManyBodyModel> models;
  for (const auto& f : files) {
    models.push_back(load_fcidump(f.string()));
    spec.validate(models.back());
  }

  const Header header{"molecule", resolved_flags(app), tolerances(s)};
  auto run_one = [&](std::size_t i) {
    MoleculeRun m;
    m.path = files[i];
    m.label = files[i].stem().string();
    const ManyBodyModel& model = models[i];
    json j = header.to_json();
    j["label"] = m.label;
    j["input"] = files[i].string();
    j["algorithm"] = algorithm;
    j["functional"] = to_string(spec.kind);
    try {
      DensityMatrix gamma = initial_guess(model);
      EnergyReport report;
      if (algorithm == "soft") {
        const SoftResult r = soft_diva_run(model, spec, cfg, Vector::Zero(model.n_spatial), soft);
        gamma = r.gamma;
        report = r.report;
        m.converged = r.converged;
        m.status = r.status;
        m.iterations = int(r.trace.size());
        m.trace = r.inner_trace;
        j["trace"] = {{"outer", r.trace}, {"inner_final", r.inner_trace}};
        j["v_hxc"] = std::vector<double>(r.state.v_hxc.data(), r.state.v_hxc.data() + r.state.v_hxc.size());
        j["mu_pks"] = r.state.mu_pks;
      } else {
        const DivaResult r = diva_run(model, spec, cfg);
        gamma = r.gamma;
        report = r.report;
        m.converged = r.converged;
        m.status = r.status;
        m.iterations = r.iterations;
        m.trace = r.trace;
        j["trace"] = r.trace;
        j["diagonal_spread"] = num_json(r.diagonal_spread);
      }
      m.energy = report.total;
      j["energy"] = report;
      j["converged"] = m.converged;
      j["status"] = m.status;
      j["iterations"] = m.iterations;
      m.eta = descending(gamma.spectrum(0).occupations);
      j["no_occupations"] = {m.eta, descending(gamma.spectrum(1).occupations)};
      const auto sites = site_occupations(gamma);
      j["oao_occupations"] = {std::vector<double>(sites[0].data(), sites[0].data() + sites[0].size()),
                              std::vector<double>(sites[1].data(), sites[1].data() + sites[1].size())};
      j["fci_energy"] = nullptr;
      if (model.n_spatial <= kFciMaxTensorOrbitals && fci_dimension(model) <= fci_max_dim)
        j["fci_energy"] = fci_ground_state(model, c.seed).energy;
    } catch (const std::exception& e) {
      m.converged = false;
      m.status = std::string("error: ") + e.what();
      j["converged"] = false;
      j["status"] = m.status;
    }
    m.result = std::move(j);
    return m;
  };
  const auto runs = parallel_map(files.size(), c.jobs, run_one);

  bool all_converged = true;
  std::ostringstream summary;
  for (const auto& m : runs) {
    all_converged = all_converged && m.converged;
    const std::string stem = "molecule_" + m.label + "_" + algorithm;
    write_file(dir / (stem + ".json"), m.result.dump(2) + "\n");
    out << (dir / (stem + ".json")).string() << '\n';
    if (c.format == "csv") {
      std::ostringstream trace;
      header.write_csv(trace);
      write_trace_csv(trace, m.trace);
      write_file(dir / (stem + "_trace.csv"), trace.str());
      summary << m.label << ',' << num(m.energy) << ',' << m.iterations << ',' << (m.converged ? 1 : 0) << ",\""
              << m.status << "\",\"";
      for (std::size_t k = 0; k < m.eta.size(); ++k) summary << (k ? " " : "") << num(m.eta[k]);
      summary << "\"\n";
    }
  }
  if (c.format == "csv") {
    std::ostringstream file;
    header.write_csv(file);
    file << "label,energy,iterations,converged,status,no_occupations\n" << summary.str();
    const fs::path p = dir / ("molecule_summary_" + algorithm + ".csv");
    write_file(p, file.str());
    out << p.string() << '\n';
  }
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_decompose(const Common& c, const std::string& input, std::ostream& out) {
  DensityMatrix gamma = [&] {
    try {
      return load_snapshot(input);
    } catch (const SnapshotError& e) {
      throw UsageError(e.what());
    }
  }();
  const DomainClass cls = classify(gamma);
  const ConvexDecomposition dec = idempotent_decompose(gamma);
  const DensityMatrix back = convex_combine(dec.members, dec.weights);
  const double error = frobenius_distance(back, gamma);
  if (c.format == "json") {
    json j;
    j["schema"] = kSchemaVersion;
    j["version"] = kVersion;
    j["input"] = input;
    j["class"] = to_string(cls.tag);
    j["pseudo_distance"] = cls.pseudo_distance;
    j["fractional_count"] = fractional_count(gamma);
    j["members"] = dec.members.size();
    j["weights"] = dec.weights;
    j["reconstruction_error"] = error;
    out << j.dump(2) << '\n';
  } else {
    out << "# diva " << kVersion << " schema " << kSchemaVersion << '\n';
    out << "class: " << to_string(cls.tag) << '\n';
    out << "pseudo_distance: " << num(cls.pseudo_distance) << '\n';
    out << "fractional_count: " << fractional_count(gamma) << '\n';
    out << "members: " << dec.members.size() << '\n';
    out << "weights:";
    for (double w : dec.weights) out << ' ' << num(w);
    out << "\nreconstruction_error: " << tag(error) << '\n';
  }
  return kExitOk;
}

// Places config-file entries right after the subcommand name so that flags
// given later on the command line override them.
std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config(path)) {
    if (key == "config") continue;
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw std::invalid_argument("empty grid");
  auto to_double = [](const std::string& s) {
    std::size_t pos = 0;
    const std::string v = trim(s);
    double x = 0.0;
    try {
      x = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("not a number: '" + v + "'");
    return x;
  };
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
    const double a = to_double(parts[0]), b = to_double(parts[1]), h = to_double(parts[2]);
    if (!(h > 0.0) || b < a) throw std::invalid_argument("range needs step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((b - a) / h + 1e-6));
    if (count > 1000000) throw std::invalid_argument("range has too many points");
    for (long k = 0; k <= count; ++k) out.push_back(a + double(k) * h);
    return out;
  }
  std::stringstream ss(t);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, value);
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DIVA: 1-RDM functional minimization on Hubbard chains and FCIDUMP molecules", "diva"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  SolverFlags solver;
  LatticeFlags lattice;
  SoftFlags soft;
  std::string fillings = "1";
  double filling = 1.0;
  std::string input, algorithm = "mono";
  std::int64_t fci_max_dim = 200000;

  CLI::App* scan = app.add_subcommand("hubbard-scan", "energy per site versus filling for a list of U values");
  add_common(scan, common);
  add_solver(scan, solver, true);
  add_lattice(scan, lattice);
  scan->add_option("--fillings", fillings, "comma list or start:stop:step of fillings n");
  scan->add_option("--fci-max-dim", fci_max_dim, "largest many-body basis for the exact-diagonalization column");
  scan->footer(
      "CSV columns: n,E_per_site,iters,converged,status,E_tb_per_site,E_fci_per_site,E_bethe_per_site\n"
      "One file per U: hubbard_scan_<functional>_L<L>_U<U>.csv");

  CLI::App* momentum = app.add_subcommand("momentum", "Bloch-state occupations eta(k) for a list of U values");
  add_common(momentum, common);
  add_solver(momentum, solver, true);
  add_lattice(momentum, lattice);
  momentum->add_option("--filling", filling, "filling n");
  momentum->footer("CSV columns: k,eta_up,eta_down\nOne file per U: momentum_<functional>_L<L>_n<n>_U<U>.csv");

  CLI::App* vxc = app.add_subcommand("vxc", "SOFT exchange-correlation potential versus filling");
  add_common(vxc, common);
  add_solver(vxc, solver, true);
  add_lattice(vxc, lattice);
  add_soft(vxc, soft);
  vxc->add_option("--fillings", fillings, "comma list or start:stop:step of fillings n");
  vxc->footer(
      "CSV columns: n,U,v_xc,v_xc_min,v_xc_max,v_xc_raw,v_hxc,mu_pks,converged,error\n"
      "v_xc is the site average, gauge-fixed so that v_xc(n->0) = 0.\n"
      "One file per U: vxc_<functional>_L<L>_U<U>.csv");

  CLI::App* molecule = app.add_subcommand("molecule", "DIVA or SOFT-DIVA on FCIDUMP inputs");
  add_common(molecule, common);
  add_solver(molecule, solver, false);
  add_soft(molecule, soft);
  molecule->add_option("--fcidump", input, "FCIDUMP file or directory of *.fcidump files")->required();
  molecule->add_option("--algorithm", algorithm, "mono | multi | soft");
  molecule->add_option("--fci-max-dim", fci_max_dim, "largest many-body basis for the reference energy");
  molecule->footer(
      "Writes molecule_<label>_<algorithm>.json per input; with --format csv also\n"
      "molecule_summary_<algorithm>.csv (label,energy,iterations,converged,status,no_occupations)\n"
      "and molecule_<label>_<algorithm>_trace.csv (iter,energy,delta_energy,delta_rdm,mu).");

  CLI::App* decompose = app.add_subcommand("decompose", "convex decomposition of a 1-RDM snapshot into idempotents");
  add_common(decompose, common);
  decompose->add_option("--input", input, "snapshot file")->required();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (scan->parsed()) return cmd_hubbard_scan(scan, common, solver, lattice, fillings, fci_max_dim, out);
    if (momentum->parsed()) return cmd_momentum(momentum, common, solver, lattice, filling, out);
    if (vxc->parsed()) return cmd_vxc(vxc, common, solver, lattice, soft, fillings, out);
    if (molecule->parsed()) return cmd_molecule(molecule, common, solver, soft, input, algorithm, fci_max_dim, out);
    if (decompose->parsed()) return cmd_decompose(common, input, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotRepresentable& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotRepresentable;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const HeaderError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FillingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace diva::cli
