#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rope/bench.hpp"
#include "rope/countmodel.hpp"
#include "rope/netgen.hpp"
#include "rope/rope.hpp"
#include "rope/select.hpp"

// File formats. Numbers are written in shortest round-trip form, so reading
// a file back yields bit-identical values. All readers throw IoError on
// missing or malformed input.

namespace rope::io {

namespace fs = std::filesystem;

/// Header row of column names, then one row per observation.
void write_data_csv(const fs::path& path, const DataMatrix& data);
DataMatrix read_data_csv(const fs::path& path);

/// Two columns i,j (zero-based). When n_nodes is unset it is taken as
/// max index + 1 (at least 2).
void write_edges_csv(const fs::path& path, const EdgeSet& edges);
EdgeSet read_edges_csv(const fs::path& path, std::optional<int> n_nodes = std::nullopt);

/// Sidecar path for a counts CSV: "<path>.json".
fs::path sidecar_path(const fs::path& counts_csv);

/// CSV i,j,count_1..count_K for stored rows plus a JSON sidecar with
/// B, lambdas, kind, subsample_size, weakness, seed, d, n.
void write_counts(const fs::path& csv_path, const CountMatrix& counts);
CountMatrix read_counts(const fs::path& csv_path);

std::string to_json(const LambdaFit& fit);
LambdaFit lambda_fit_from_json(const std::string& text);

/// Metadata, per-lambda first-pass and constrained fits, and the edge table
/// {i, j, count_at_lambda_b, qvalue} in ascending q order.
std::string to_json(const RopeResult& result);
/// Restores the fields needed for selection: d, B, lambdas, lambda_a,
/// lambda_b, indices, pi_star, fits, final fit and histogram, q-values.
RopeResult rope_result_from_json(const std::string& text);

void write_rope_result(const fs::path& path, const RopeResult& result);
RopeResult read_rope_result(const fs::path& path);

/// lambda,g,pi,loglik for every first-pass fit; NA where not fitted.
void write_g_curve_csv(const fs::path& path, const RopeResult& result);

void write_report_csv(const fs::path& path, const std::vector<ReportRow>& rows);
void write_kappa_csv(const fs::path& path, const std::vector<KappaRow>& rows);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

}  // namespace rope::io
