#include "nsmfm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace nsmfm::io {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Reads a headed CSV and hands each data row to `row(fields, where)`.
template <class Row>
void read_csv(const fs::path& path, const std::string& header, const Row& row) {
  std::ifstream in = open_in(path);
  const std::vector<std::string> expected = split(header);
  std::string line;
  std::size_t lineNo = 0;
  bool sawHeader = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineNo);
    const std::vector<std::string> fields = split(line);
    if (!sawHeader) {
      if (fields != expected) fail(ErrorCode::ParseError, where + ": expected header '" + header + "', got '" + line + "'");
      sawHeader = true;
      continue;
    }
    if (fields.size() != expected.size()) {
      fail(ErrorCode::ParseError, where + ": expected " + std::to_string(expected.size()) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    row(fields, where);
  }
  if (!sawHeader) fail(ErrorCode::ParseError, path.string() + ":1: missing header '" + header + "'");
}

long long parse_int(const std::string& text, const std::string& where) {
  long long v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail(ErrorCode::ParseError, where + ": invalid integer '" + text + "'");
  return v;
}

Index parse_index(const std::string& text, Index upper, const char* name, const std::string& where) {
  const long long v = parse_int(text, where);
  if (v < 1 || (upper > 0 && v > upper)) {
    fail(ErrorCode::ParseError, where + ": " + name + "=" + text + " out of range 1.." + std::to_string(upper));
  }
  return static_cast<Index>(v);
}

// Cells of a dense 3-d grid filled from long-format rows; each cell exactly once.
struct Grid3 {
  Index n0, n1, n2;
  std::vector<double> values;
  std::vector<bool> seen;

  Grid3(Index a, Index b, Index c)
      : n0(a), n1(b), n2(c), values(static_cast<std::size_t>(a * b * c)), seen(values.size(), false) {}

  void set(Index i0, Index i1, Index i2, double v, const std::string& where) {
    const auto k = static_cast<std::size_t>(((i0 - 1) * n1 + (i1 - 1)) * n2 + (i2 - 1));
    if (seen[k]) fail(ErrorCode::ParseError, where + ": duplicate entry");
    seen[k] = true;
    values[k] = v;
  }

  void require_complete(const fs::path& path) const {
    for (bool s : seen)
      if (!s) fail(ErrorCode::ParseError, path.string() + ": missing entries (expected " + std::to_string(values.size()) + ")");
  }

  [[nodiscard]] double at(Index i0, Index i1, Index i2) const {
    return values[static_cast<std::size_t>((i0 * n1 + i1) * n2 + i2)];
  }
};

Index meta_int(const KeyValues& kv, const std::string& key, const fs::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) fail(ErrorCode::ParseError, path.string() + ": missing key '" + key + "'");
  const long long v = parse_int(it->second, path.string() + ": key " + key);
  if (v < 1) fail(ErrorCode::ParseError, path.string() + ": " + key + " must be positive");
  return static_cast<Index>(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorCode::IoError, "cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) fail(ErrorCode::ParseError, where + ": invalid number '" + text + "'");
  return v;
}

KeyValues read_key_values(const fs::path& path) {
  std::ifstream in = open_in(path);
  KeyValues kv;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineNo) + ": expected key=value, got '" + line + "'");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineNo) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  std::ofstream out = open_out(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  close_out(out, path);
}

void write_panel(const fs::path& path, const MatrixPanel& panel) {
  std::ofstream out = open_out(path);
  out << "t,i,j,value\n";
  for (Index t = 0; t < panel.T(); ++t)
    for (Index i = 0; i < panel.p1(); ++i)
      for (Index j = 0; j < panel.p2(); ++j)
        out << t + 1 << ',' << i + 1 << ',' << j + 1 << ',' << format_double(panel[t](i, j)) << '\n';
  close_out(out, path);
  write_key_values(fs::path(path.string() + ".meta"),
                   {{"p1", std::to_string(panel.p1())}, {"p2", std::to_string(panel.p2())}, {"T", std::to_string(panel.T())}});
}

MatrixPanel read_panel(const fs::path& path) {
  const fs::path metaPath(path.string() + ".meta");
  if (!fs::exists(metaPath)) fail(ErrorCode::IoError, "missing metadata file '" + metaPath.string() + "'");
  const KeyValues meta = read_key_values(metaPath);
  const Index p1 = meta_int(meta, "p1", metaPath), p2 = meta_int(meta, "p2", metaPath), T = meta_int(meta, "T", metaPath);
  Grid3 grid(T, p1, p2);
  read_csv(path, "t,i,j,value", [&](const std::vector<std::string>& f, const std::string& where) {
    const Index t = parse_index(f[0], T, "t", where);
    const Index i = parse_index(f[1], p1, "i", where);
    const Index j = parse_index(f[2], p2, "j", where);
    const double v = parse_double(f[3], where);
    if (!std::isfinite(v)) fail(ErrorCode::ParseError, where + ": non-finite value");
    grid.set(t, i, j, v, where);
  });
  grid.require_complete(path);
  std::vector<Matrix> frames(static_cast<std::size_t>(T), Matrix(p1, p2));
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < p1; ++i)
      for (Index j = 0; j < p2; ++j) frames[static_cast<std::size_t>(t)](i, j) = grid.at(t, i, j);
  return MatrixPanel(std::move(frames));
}

void write_loadings(const fs::path& path, const Loadings& loadings) {
  std::ofstream out = open_out(path);
  out << "i,k,value\n";
  for (Index i = 0; i < loadings.p(); ++i)
    for (Index k = 0; k < loadings.h(); ++k) out << i + 1 << ',' << k + 1 << ',' << format_double(loadings.matrix()(i, k)) << '\n';
  close_out(out, path);
}

Loadings read_loadings(const fs::path& path, Index p, Index h) {
  Grid3 grid(1, p, h);
  read_csv(path, "i,k,value", [&](const std::vector<std::string>& f, const std::string& where) {
    grid.set(1, parse_index(f[0], p, "i", where), parse_index(f[1], h, "k", where), parse_double(f[2], where), where);
  });
  grid.require_complete(path);
  Matrix m(p, h);
  for (Index i = 0; i < p; ++i)
    for (Index k = 0; k < h; ++k) m(i, k) = grid.at(0, i, k);
  return Loadings(std::move(m));
}

Loadings read_loadings(const fs::path& path) {
  Index p = 0, h = 0;
  read_csv(path, "i,k,value", [&](const std::vector<std::string>& f, const std::string& where) {
    p = std::max(p, parse_index(f[0], 0, "i", where));
    h = std::max(h, parse_index(f[1], 0, "k", where));
  });
  if (h == 0) return Loadings(Matrix(0, 0));
  return read_loadings(path, p, h);
}

void write_factors(const fs::path& path, const FactorPath& factors) {
  std::ofstream out = open_out(path);
  out << "t,i,j,value\n";
  for (Index t = 0; t < factors.T(); ++t)
    for (Index i = 0; i < factors.hR(); ++i)
      for (Index j = 0; j < factors.hC(); ++j)
        out << t + 1 << ',' << i + 1 << ',' << j + 1 << ',' << format_double(factors[t](i, j)) << '\n';
  close_out(out, path);
}

FactorPath read_factors(const fs::path& path, Index hR, Index hC, Index T) {
  if (hR * hC == 0) {
    read_csv(path, "t,i,j,value", [&](const std::vector<std::string>&, const std::string& where) {
      fail(ErrorCode::ParseError, where + ": unexpected entry for an empty factor block");
    });
    return FactorPath::zeros(hR, hC, T);
  }
  Grid3 grid(T, hR, hC);
  read_csv(path, "t,i,j,value", [&](const std::vector<std::string>& f, const std::string& where) {
    grid.set(parse_index(f[0], T, "t", where), parse_index(f[1], hR, "i", where), parse_index(f[2], hC, "j", where),
             parse_double(f[3], where), where);
  });
  grid.require_complete(path);
  std::vector<Matrix> frames(static_cast<std::size_t>(T), Matrix(hR, hC));
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < hR; ++i)
      for (Index j = 0; j < hC; ++j) frames[static_cast<std::size_t>(t)](i, j) = grid.at(t, i, j);
  return FactorPath(hR, hC, std::move(frames));
}

void write_spectra(const fs::path& path, const std::vector<std::pair<std::string, const Spectrum*>>& spectra) {
  std::ofstream out = open_out(path);
  out << "matrix_id,j,eigenvalue\n";
  for (const auto& [id, s] : spectra) {
    if (s == nullptr) continue;
    for (Index j = 0; j < s->size(); ++j) out << id << ',' << j + 1 << ',' << format_double(s->eigenvalues[j]) << '\n';
  }
  close_out(out, path);
}

void write_ranks(const fs::path& path, const Ranks& ranks) {
  write_key_values(path, {{"hR1", std::to_string(ranks.hR1)},
                          {"hC1", std::to_string(ranks.hC1)},
                          {"hR0", std::to_string(ranks.hR0)},
                          {"hC0", std::to_string(ranks.hC0)}});
}

Ranks read_ranks(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::ParseError, path.string() + ": missing key '" + key + "'");
    return static_cast<int>(parse_int(it->second, path.string() + ": key " + key));
  };
  Ranks r{get("hR1"), get("hC1"), get("hR0"), get("hC0")};
  r.validate();
  return r;
}

void write_graph(const fs::path& path, const RankGraph& graph) {
  std::ofstream out = open_out(path);
  out << "from_hR1,from_hC1,to_hR1,to_hC1,er_value,is_fixed_point\n";
  for (const RankEdge& e : graph.edges()) {
    out << e.from.hR1 << ',' << e.from.hC1 << ',' << e.to.hR1 << ',' << e.to.hC1 << ',' << format_double(e.erValue) << ','
        << (e.fixedPoint ? 1 : 0) << '\n';
  }
  close_out(out, path);
}

RankGraph read_graph(const fs::path& path) {
  std::vector<RankEdge> edges;
  std::vector<std::string> wheres;
  read_csv(path, "from_hR1,from_hC1,to_hR1,to_hC1,er_value,is_fixed_point",
           [&](const std::vector<std::string>& f, const std::string& where) {
             RankEdge e;
             e.from = RankNode{static_cast<int>(parse_index(f[0], 0, "from_hR1", where)),
                               static_cast<int>(parse_index(f[1], 0, "from_hC1", where))};
             e.to = RankNode{static_cast<int>(parse_index(f[2], 0, "to_hR1", where)),
                             static_cast<int>(parse_index(f[3], 0, "to_hC1", where))};
             e.erValue = parse_double(f[4], where);
             const long long fixed = parse_int(f[5], where);
             if (fixed != 0 && fixed != 1) fail(ErrorCode::ParseError, where + ": is_fixed_point must be 0 or 1");
             if (fixed == 1 && !(e.from == e.to)) fail(ErrorCode::ParseError, where + ": fixed point without a self-edge");
             e.fixedPoint = fixed == 1;
             e.degenerate = e.from == e.to && fixed == 0;
             edges.push_back(std::move(e));
             wheres.push_back(where);
           });
  const auto n = edges.size();
  int hMax = 0;
  while (static_cast<std::size_t>((hMax + 1) * (hMax + 1)) <= n) ++hMax;
  if (n == 0 || static_cast<std::size_t>(hMax * hMax) != n) {
    fail(ErrorCode::ParseError, path.string() + ": edge count " + std::to_string(n) + " is not a square");
  }
  try {
    return RankGraph(hMax, std::move(edges));
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_long_csv(const fs::path& path, const McResult& result) {
  std::ofstream out = open_out(path);
  out << "case,p1,p2,T,rep,criterion,metric,value\n";
  for (const McRecord& r : result.records) {
    out << r.caseId << ',' << r.p1 << ',' << r.p2 << ',' << r.T << ',' << r.rep << ',' << r.criterion << ',' << r.metric
        << ',' << format_double(r.value) << '\n';
  }
  close_out(out, path);
}

void write_aggregate_csv(const fs::path& path, const std::vector<std::string>& groupBy,
                         const std::vector<AggregateRow>& rows) {
  std::ofstream out = open_out(path);
  for (const std::string& g : groupBy) out << g << ',';
  out << "metric,n,mean,median,var,q25,q75,min,max\n";
  for (const AggregateRow& r : rows) {
    for (const std::string& k : r.keys) out << k << ',';
    out << r.metric << ',' << r.n << ',' << format_double(r.mean) << ',' << format_double(r.median) << ','
        << format_double(r.variance) << ',' << format_double(r.q25) << ',' << format_double(r.q75) << ','
        << format_double(r.min) << ',' << format_double(r.max) << '\n';
  }
  close_out(out, path);
}

void write_differences_csv(const fs::path& path, const std::vector<DifferenceRow>& rows) {
  std::ofstream out = open_out(path);
  out << "case,p1,p2,T,criterion,metric,difference_vs_static\n";
  for (const DifferenceRow& r : rows) {
    out << r.caseId << ',' << r.p1 << ',' << r.p2 << ',' << r.T << ',' << r.criterion << ',' << r.metric << ','
        << format_double(r.difference) << '\n';
  }
  close_out(out, path);
}

void write_seeds_csv(const fs::path& path, const McResult& result) {
  using Row = std::tuple<std::string, Index, Index, Index, int, std::uint64_t, std::string>;
  std::vector<Row> rows;
  std::set<std::tuple<std::string, Index, Index, Index, int>> seen;
  for (const McRecord& r : result.records) {
    if (seen.insert({r.caseId, r.p1, r.p2, r.T, r.rep}).second) rows.emplace_back(r.caseId, r.p1, r.p2, r.T, r.rep, r.seed, "ok");
  }
  for (const McFailure& f : result.failures) {
    if (seen.insert({f.caseId, f.p1, f.p2, f.T, f.rep}).second) rows.emplace_back(f.caseId, f.p1, f.p2, f.T, f.rep, f.seed, "failed");
  }
  std::ofstream out = open_out(path);
  out << "case,p1,p2,T,rep,seed,status\n";
  for (const auto& [c, p1, p2, T, rep, seed, status] : rows) {
    out << c << ',' << p1 << ',' << p2 << ',' << T << ',' << rep << ',' << seed << ',' << status << '\n';
  }
  close_out(out, path);
}

}  // namespace nsmfm::io
