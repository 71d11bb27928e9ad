#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nsmfm/harness.hpp"
#include "nsmfm/linalg.hpp"
#include "nsmfm/model.hpp"
#include "nsmfm/ranksel.hpp"

namespace nsmfm::io {

namespace fs = std::filesystem;

using KeyValues = std::map<std::string, std::string>;

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& where);

// Flat "key=value" text, one pair per line; '#' starts a comment line.
KeyValues read_key_values(const fs::path& path);
void write_key_values(const fs::path& path, const KeyValues& kv);

// Long format "t,i,j,value" with 1-based indices, plus "<path>.meta"
// holding p1, p2 and T.
void write_panel(const fs::path& path, const MatrixPanel& panel);
MatrixPanel read_panel(const fs::path& path);

// "i,k,value", 1-based.
void write_loadings(const fs::path& path, const Loadings& loadings);
Loadings read_loadings(const fs::path& path, Index p, Index h);
// Dimensions taken from the largest indices in the file (0 columns when empty).
Loadings read_loadings(const fs::path& path);

// "t,i,j,value", 1-based.
void write_factors(const fs::path& path, const FactorPath& factors);
FactorPath read_factors(const fs::path& path, Index hR, Index hC, Index T);

// "matrix_id,j,eigenvalue", 1-based j.
void write_spectra(const fs::path& path, const std::vector<std::pair<std::string, const Spectrum*>>& spectra);

void write_ranks(const fs::path& path, const Ranks& ranks);
Ranks read_ranks(const fs::path& path);

// "from_hR1,from_hC1,to_hR1,to_hC1,er_value,is_fixed_point".
void write_graph(const fs::path& path, const RankGraph& graph);
RankGraph read_graph(const fs::path& path);

void write_long_csv(const fs::path& path, const McResult& result);
void write_aggregate_csv(const fs::path& path, const std::vector<std::string>& groupBy,
                         const std::vector<AggregateRow>& rows);
void write_differences_csv(const fs::path& path, const std::vector<DifferenceRow>& rows);
void write_seeds_csv(const fs::path& path, const McResult& result);

}  // namespace nsmfm::io
