#include "diva/errors.hpp"
#include "diva/model.hpp"
#include "diva/oracle.hpp"
#include "diva/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace diva;

TEST_CASE("open dimer hopping matrix") {
  const ManyBodyModel m = build_hubbard({2, 1.0, 0.0, false, 1.0});
  Matrix expected(2, 2);
  expected << 0, -1, -1, 0;
  CHECK(m.one_body == expected);
  CHECK(m.n_electrons == std::array<int, 2>{1, 1});
  CHECK(m.local());
}

TEST_CASE("periodic chains wrap around") {
  const ManyBodyModel m = build_hubbard({4, 1.0, 2.0, true, 1.0});
  CHECK(m.one_body(0, 3) == -1.0);
  CHECK(m.one_body(3, 0) == -1.0);
  CHECK(m.one_body(0, 2) == 0.0);
  CHECK(m.hubbard_u() == 2.0);
  const ManyBodyModel o = build_hubbard({4, 1.0, 2.0, false, 1.0});
  CHECK(o.one_body(0, 3) == 0.0);
}

TEST_CASE("electron counts follow the filling") {
  CHECK(electrons_per_spin({202, 1.0, 4.0, true, 1.0}) == 101);
  CHECK(build_hubbard({202, 1.0, 4.0, true, 1.0}).n_electrons[1] == 101);
  CHECK(electrons_per_spin({52, 1.0, 8.0, true, 1.5}) == 39);
  CHECK_THROWS_AS(electrons_per_spin({6, 1.0, 4.0, true, 0.5}), FillingError);
  CHECK_THROWS_AS(electrons_per_spin({6, 1.0, 4.0, true, 2.5}), FillingError);
  CHECK_THROWS(build_hubbard({1, 1.0, 0.0, true, 2.0}));
  CHECK_THROWS(build_hubbard({4, 1.0, -1.0, true, 1.0}));
}

TEST_CASE("degenerate periodic fillings still build") {
  const ManyBodyModel m = build_hubbard({8, 1.0, 4.0, true, 1.0});
  CHECK(m.n_electrons[0] == 4);
  CHECK_NOTHROW(build_hubbard({8, 1.0, 4.0, false, 1.0}));
  CHECK_NOTHROW(build_hubbard({10, 1.0, 4.0, true, 1.0}));
}

TEST_CASE("with_coulomb replaces U only") {
  const ManyBodyModel a = build_hubbard({6, 1.0, 1.0, true, 1.0});
  const ManyBodyModel b = with_coulomb(a, 8.0);
  CHECK(b.hubbard_u() == 8.0);
  CHECK(b.one_body == a.one_body);
}

namespace {

const char* kHeader = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n";

ManyBodyModel parse(const std::string& body) {
  std::istringstream in(std::string(kHeader) + body);
  return parse_fcidump(in);
}

}  // namespace

TEST_CASE("FCIDUMP record types") {
  const ManyBodyModel m = parse("1.5 1 1 1 1\n-1.25 1 2 0 0\n0.7 0 0 0 0\n");
  CHECK(m.core_energy == 0.7);
  CHECK(m.one_body(0, 1) == -1.25);
  CHECK(m.one_body(1, 0) == -1.25);
  const auto& t = std::get<FullTensor>(m.interaction);
  CHECK(t(0, 0, 0, 0) == 1.5);
  CHECK(m.n_electrons == std::array<int, 2>{1, 1});
}

TEST_CASE("FCIDUMP two-electron records fill all permutation images") {
  const ManyBodyModel m = parse("0.2 1 2 1 1\n0.3 1 2 2 1\n");
  const auto& t = std::get<FullTensor>(m.interaction);
  for (auto [i, j, k, l] : {std::array{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}}) CHECK(t(i, j, k, l) == 0.2);
  for (auto [i, j, k, l] : {std::array{0, 1, 1, 0}, {1, 0, 0, 1}, {0, 1, 0, 1}, {1, 0, 1, 0}}) CHECK(t(i, j, k, l) == 0.3);
}

TEST_CASE("FCIDUMP errors") {
  std::istringstream a(" &FCI NORB=2,MS2=0,\n &END\n");
  CHECK_THROWS_AS(parse_fcidump(a), HeaderError);
  CHECK_THROWS_AS(parse("1.0 1 1 1\n"), ParseError);
  CHECK_THROWS_AS(parse("1.0 3 1 1 1\n"), ParseError);
  CHECK_THROWS_AS(parse("abc 1 1 1 1\n"), ParseError);
  try {
    parse("0.5 1 1 1 1\n1.0 1 1 1 1 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
  std::istringstream b("1.0 1 1 1 1\n");
  CHECK_THROWS_AS(parse_fcidump(b), ParseError);
  std::istringstream c(" &FCI NORB=2,NELEC=3,MS2=0,\n &END\n");
  CHECK_THROWS_AS(parse_fcidump(c), HeaderError);
  CHECK_THROWS_AS(load_fcidump("/nonexistent/file.fcidump"), ParseError);
}

TEST_CASE("FCIDUMP accepts a slash terminator and Fortran exponents") {
  std::istringstream in(" &FCI NORB=1,NELEC=2,MS2=0,\n /\n 0.5D+00 1 1 1 1\n -1.0d0 1 1 0 0\n");
  const ManyBodyModel m = parse_fcidump(in);
  CHECK(std::get<FullTensor>(m.interaction)(0, 0, 0, 0) == 0.5);
  CHECK(m.one_body(0, 0) == -1.0);
}

TEST_CASE("FCIDUMP write and parse round-trip") {
  const ManyBodyModel m = parse("0.6 1 1 1 1\n0.45 2 2 2 2\n0.12 1 2 1 2\n0.5 1 1 2 2\n-1.1 1 1 0 0\n-0.2 1 2 0 0\n0.3 0 0 0 0\n");
  std::stringstream ss;
  write_fcidump(ss, m);
  const ManyBodyModel back = parse_fcidump(ss);
  CHECK(back.one_body == m.one_body);
  CHECK(back.core_energy == m.core_energy);
  CHECK(std::get<FullTensor>(back.interaction).data() == std::get<FullTensor>(m.interaction).data());
}

TEST_CASE("bundled H2 integrals parse") {
  const std::filesystem::path dir = DIVA_DATA_DIR;
  for (const char* name : {"h2_r0.50", "h2_r1.00", "h2_r3.00"}) {
    const ManyBodyModel m = load_fcidump((dir / "h2" / (std::string(name) + ".fcidump")).string());
    CHECK(m.n_spatial == 4);
    CHECK(m.n_electrons == std::array<int, 2>{1, 1});
    CHECK(m.core_energy > 0.0);
  }
}

TEST_CASE("Bloch occupations of the Fermi sea") {
  const LatticeSpec ls{10, 1.0, 0.0, true, 1.0};
  const auto pts = bloch_occupations(initial_guess(build_hubbard(ls)), ls);
  REQUIRE(pts.size() == 10);
  double total = 0.0;
  for (const auto& p : pts) {
    CHECK(p.k > -std::numbers::pi);
    CHECK(p.k <= std::numbers::pi + 1e-12);
    if (std::abs(p.k) < std::numbers::pi / 2 - 1e-9) CHECK(p.eta[0] == doctest::Approx(1.0));
    if (std::abs(p.k) > std::numbers::pi / 2 + 1e-9) CHECK(std::abs(p.eta[0]) < 1e-10);
    total += p.eta[0];
  }
  CHECK(total == doctest::Approx(5.0));
}

TEST_CASE("Bloch occupations of a scaled identity") {
  const LatticeSpec ls{6, 1.0, 0.0, true, 1.0};
  const DensityMatrix g = DensityMatrix::closed_shell(Matrix::Identity(6, 6) * 0.5);
  for (const auto& p : bloch_occupations(g, ls)) CHECK(p.eta[1] == doctest::Approx(0.5));
}

TEST_CASE("Bloch occupations need translation invariance") {
  const LatticeSpec ls{4, 1.0, 0.0, true, 1.0};
  Vector d(4);
  d << 1, 0, 1, 0;
  const DensityMatrix g = DensityMatrix::closed_shell(d.asDiagonal());
  CHECK_THROWS_AS(bloch_occupations(g, ls), NotUniform);
  const LatticeSpec open{4, 1.0, 0.0, false, 1.0};
  CHECK_THROWS_AS(bloch_occupations(g, open), NotUniform);
}
