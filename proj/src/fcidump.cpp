#include "diva/errors.hpp"
#include "diva/model.hpp"

#include <cctype>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace diva {
namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Collects KEY=v1,v2,... pairs from the namelist body.
std::map<std::string, std::vector<std::string>> parse_namelist(const std::string& body) {
  std::map<std::string, std::vector<std::string>> keys;
  std::string cleaned = body;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream is(cleaned);
  std::string tok, current;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      if (!current.empty()) keys[current].push_back(tok);
      continue;
    }
    current = upper(tok.substr(0, eq));
    keys[current];
    if (eq + 1 < tok.size()) keys[current].push_back(tok.substr(eq + 1));
  }
  return keys;
}

int header_int(const std::map<std::string, std::vector<std::string>>& keys, const std::string& name,
               std::optional<int> fallback) {
  const auto it = keys.find(name);
  if (it == keys.end() || it->second.empty()) {
    if (fallback) return *fallback;
    throw HeaderError("FCIDUMP header lacks " + name);
  }
  const std::string& v = it->second.front();
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw HeaderError("FCIDUMP header: bad value for " + name);
  return out;
}

}  // namespace

ManyBodyModel parse_fcidump(std::istream& in) {
  std::string line, header;
  std::size_t lineno = 0;
  bool started = false, closed = false;
  while (!closed && std::getline(in, line)) {
    ++lineno;
    std::string u = upper(line);
    if (!started) {
      const auto pos = u.find("&FCI");
      if (pos == std::string::npos) {
        if (u.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw ParseError(lineno, "expected &FCI namelist header");
      }
      started = true;
      u = u.substr(pos + 4);
    }
    std::size_t end = u.find("&END");
    std::size_t term = 4;
    if (end == std::string::npos) {
      end = u.find('/');
      term = 1;
    }
    if (end != std::string::npos) {
      header += ' ' + u.substr(0, end);
      closed = true;
      if (u.find_first_not_of(" \t\r", end + term) != std::string::npos)
        throw ParseError(lineno, "unexpected text after namelist terminator");
    } else {
      header += ' ' + u;
    }
  }
  if (!started) throw HeaderError("empty FCIDUMP input");
  if (!closed) throw ParseError(lineno, "namelist header is not terminated");

  const auto keys = parse_namelist(header);
  const int norb = header_int(keys, "NORB", std::nullopt);
  const int nelec = header_int(keys, "NELEC", std::nullopt);
  const int ms2 = header_int(keys, "MS2", 0);
  if (norb <= 0) throw HeaderError("NORB must be positive");
  if (nelec < 0 || nelec > 2 * norb) throw HeaderError("NELEC out of range");
  if ((nelec + ms2) % 2 != 0 || std::abs(ms2) > nelec) throw HeaderError("NELEC and MS2 are inconsistent");

  ManyBodyModel m;
  m.n_spatial = norb;
  m.one_body = Matrix::Zero(norb, norb);
  FullTensor eri(norb);
  m.n_electrons = {(nelec + ms2) / 2, (nelec - ms2) / 2};

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream rec(line);
    std::string vtok;
    long idx[4];
    rec >> vtok;
    if (!(rec >> idx[0] >> idx[1] >> idx[2] >> idx[3])) throw ParseError(lineno, "expected \"value i j k l\"");
    std::string trailing;
    if (rec >> trailing) throw ParseError(lineno, "extra fields in record");
    for (char& c : vtok)
      if (c == 'D' || c == 'd') c = 'E';
    char* endp = nullptr;
    const double value = std::strtod(vtok.c_str(), &endp);
    if (endp == vtok.c_str() || *endp != '\0' || !std::isfinite(value)) throw ParseError(lineno, "bad value " + vtok);
    for (long x : idx)
      if (x < 0 || x > norb) throw ParseError(lineno, "orbital index out of range");
    const auto [i, j, k, l] = std::array<long, 4>{idx[0], idx[1], idx[2], idx[3]};
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      m.core_energy = value;
    } else if (k == 0 && l == 0) {
      if (j == 0) continue;  // orbital energy record, not part of the Hamiltonian
      if (i == 0) throw ParseError(lineno, "one-body record with zero index");
      m.one_body(i - 1, j - 1) = value;
      m.one_body(j - 1, i - 1) = value;
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0) throw ParseError(lineno, "two-body record with zero index");
      eri.set_symmetric(int(i - 1), int(j - 1), int(k - 1), int(l - 1), value);
    }
  }
  m.interaction = std::move(eri);
  return m;
}

ManyBodyModel load_fcidump(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError(0, "cannot open " + path);
  return parse_fcidump(f);
}

void write_fcidump(std::ostream& out, const ManyBodyModel& model) {
  const auto* eri = std::get_if<FullTensor>(&model.interaction);
  if (eri == nullptr) throw ModelError("write_fcidump needs a two-body tensor");
  const int n = model.n_spatial;
  const int nelec = model.n_electrons[0] + model.n_electrons[1];
  const int ms2 = model.n_electrons[0] - model.n_electrons[1];
  out << "&FCI NORB=" << n << ",NELEC=" << nelec << ",MS2=" << ms2 << ",\n ORBSYM=";
  for (int i = 0; i < n; ++i) out << "1,";
  out << "\n ISYM=1,\n&END\n";
  char buf[64];
  auto rec = [&](double v, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) {
          if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
          const double v = (*eri)(i, j, k, l);
          if (v != 0.0) rec(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      if (model.one_body(i, j) != 0.0) rec(model.one_body(i, j), i + 1, j + 1, 0, 0);
  rec(model.core_energy, 0, 0, 0, 0);
}

}  // namespace diva
