#include "rope/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rope/error.hpp"

namespace rope::io {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                         : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line + 1);
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const char* begin = s.data();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw IoError(where(path, line) + ": not a number: '" + s + "'");
  return value;
}

long long parse_int(const std::string& s, const fs::path& path, std::size_t line) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw IoError(where(path, line) + ": not an integer: '" + s + "'");
  return value;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json fit_json(const LambdaFit& f) {
  const auto& m = f.params;
  return json{{"lambda", f.lambda},   {"fitted", f.fitted}, {"pi", m.pi},
              {"mu1", m.mu1},         {"sigma1", m.sigma1}, {"gamma", m.gamma},
              {"mu2", m.mu2},         {"tau1", m.tau1},     {"tau2", m.tau2},
              {"c", m.c},             {"B", f.B},           {"loglik", nullable(f.loglik)},
              {"separation", f.separation}, {"u_shaped", f.u_shaped},
              {"window", {{"pi_within", f.window.pi_within}, {"mu1", f.window.mu1},
                          {"sigma1", f.window.sigma1}, {"gamma", f.window.gamma},
                          {"mu2", f.window.mu2}}}};
}

LambdaFit fit_from(const json& j) {
  LambdaFit f;
  f.lambda = j.at("lambda").get<double>();
  f.fitted = j.value("fitted", true);
  f.params.pi = j.at("pi").get<double>();
  f.params.mu1 = j.at("mu1").get<double>();
  f.params.sigma1 = j.at("sigma1").get<double>();
  f.params.gamma = j.at("gamma").get<double>();
  f.params.mu2 = j.at("mu2").get<double>();
  f.params.tau1 = j.at("tau1").get<double>();
  f.params.tau2 = j.at("tau2").get<double>();
  f.params.c = j.at("c").get<int>();
  f.B = j.value("B", 0);
  f.loglik = number_or_nan(j.at("loglik"));
  f.separation = j.at("separation").get<double>();
  f.u_shaped = j.at("u_shaped").get<bool>();
  if (j.contains("window")) {
    const auto& w = j["window"];
    f.window = {w.at("pi_within").get<double>(), w.at("mu1").get<double>(), w.at("sigma1").get<double>(),
                w.at("gamma").get<double>(), w.at("mu2").get<double>()};
  }
  return f;
}

json ci_json(const ArgmaxCI& ci) {
  return json{{"lambda_lo", ci.lambda_lo}, {"lambda_hi", ci.lambda_hi},
              {"index_lo", ci.index_lo},   {"index_hi", ci.index_hi},
              {"replicates", ci.argmax_lambdas.size()}, {"failed_replicates", ci.failed_replicates}};
}

ArgmaxCI ci_from(const json& j) {
  ArgmaxCI ci;
  ci.lambda_lo = j.at("lambda_lo").get<double>();
  ci.lambda_hi = j.at("lambda_hi").get<double>();
  ci.index_lo = j.at("index_lo").get<std::size_t>();
  ci.index_hi = j.at("index_hi").get<std::size_t>();
  ci.failed_replicates = j.value("failed_replicates", 0);
  return ci;
}

template <class F>
auto parse_json(const std::string& text, F&& body) {
  try {
    return body(json::parse(text));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

void write_data_csv(const fs::path& path, const DataMatrix& data) {
  auto out = open_out(path);
  for (Eigen::Index c = 0; c < data.d(); ++c) {
    if (c) out << ',';
    out << (static_cast<std::size_t>(c) < data.column_names.size() ? data.column_names[static_cast<std::size_t>(c)]
                                                                   : "x" + std::to_string(c));
  }
  out << '\n';
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    for (Eigen::Index c = 0; c < data.d(); ++c) {
      if (c) out << ',';
      out << format_double(data.values(r, c));
    }
    out << '\n';
  }
  finish(out, path);
}

DataMatrix read_data_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IoError(path.string() + ": empty data file");
  DataMatrix data;
  data.column_names = rows.front();
  const auto d = static_cast<Eigen::Index>(data.column_names.size());
  data.values.resize(static_cast<Eigen::Index>(rows.size() - 1), d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != d)
      throw IoError(where(path, r) + ": expected " + std::to_string(d) + " fields");
    for (Eigen::Index c = 0; c < d; ++c) {
      const double v = parse_double(rows[r][static_cast<std::size_t>(c)], path, r);
      if (!std::isfinite(v)) throw IoError(where(path, r) + ": non-finite value");
      data.values(static_cast<Eigen::Index>(r - 1), c) = v;
    }
  }
  return data;
}

void write_edges_csv(const fs::path& path, const EdgeSet& edges) {
  auto out = open_out(path);
  out << "i,j\n";
  for (const auto& e : edges) out << e.i << ',' << e.j << '\n';
  finish(out, path);
}

EdgeSet read_edges_csv(const fs::path& path, std::optional<int> n_nodes) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"i", "j"})
    throw IoError(path.string() + ": expected header i,j");
  std::vector<Edge> edges;
  int max_index = 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw IoError(where(path, r) + ": expected 2 fields");
    const auto a = static_cast<int>(parse_int(rows[r][0], path, r));
    const auto b = static_cast<int>(parse_int(rows[r][1], path, r));
    edges.push_back({std::min(a, b), std::max(a, b)});
    max_index = std::max(max_index, std::max(a, b));
  }
  try {
    return EdgeSet(n_nodes.value_or(max_index + 1), std::move(edges));
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

fs::path sidecar_path(const fs::path& counts_csv) { return fs::path(counts_csv.string() + ".json"); }

void write_counts(const fs::path& csv_path, const CountMatrix& counts) {
  auto out = open_out(csv_path);
  out << "i,j";
  for (std::size_t k = 0; k < counts.n_lambdas(); ++k) out << ",count_" << (k + 1);
  out << '\n';
  for (const auto& row : counts.rows) {
    out << row.edge.i << ',' << row.edge.j;
    for (int c : row.counts) out << ',' << c;
    out << '\n';
  }
  finish(out, csv_path);

  const json meta{{"B", counts.plan.B},
                  {"lambdas", counts.grid.values()},
                  {"kind", std::string(to_string(counts.plan.kind))},
                  {"subsample_size", counts.plan.subsample_size},
                  {"weakness", counts.plan.weakness},
                  {"seed", counts.plan.seed},
                  {"d", counts.d},
                  {"n", counts.n},
                  {"warnings", counts.warnings}};
  write_text(sidecar_path(csv_path), meta.dump(2) + "\n");
}

CountMatrix read_counts(const fs::path& csv_path) {
  CountMatrix counts;
  parse_json(read_text(sidecar_path(csv_path)), [&](const json& meta) {
    counts.plan.B = meta.at("B").get<int>();
    counts.plan.kind = parse_resample_kind(meta.at("kind").get<std::string>());
    counts.plan.subsample_size = meta.at("subsample_size").get<int>();
    counts.plan.weakness = meta.at("weakness").get<double>();
    counts.plan.seed = meta.at("seed").get<std::uint64_t>();
    counts.d = meta.at("d").get<int>();
    counts.n = meta.at("n").get<int>();
    counts.grid = PenaltyGrid(meta.at("lambdas").get<std::vector<double>>());
    if (meta.contains("warnings")) counts.warnings = meta["warnings"].get<std::vector<std::string>>();
    return 0;
  });
  const auto rows = read_csv(csv_path);
  const std::size_t K = counts.n_lambdas();
  if (rows.empty() || rows.front().size() != K + 2)
    throw IoError(csv_path.string() + ": header does not match the sidecar lambda count");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != K + 2) throw IoError(where(csv_path, r) + ": wrong field count");
    CountRow row;
    row.edge = {static_cast<int>(parse_int(rows[r][0], csv_path, r)),
                static_cast<int>(parse_int(rows[r][1], csv_path, r))};
    for (std::size_t k = 0; k < K; ++k)
      row.counts.push_back(static_cast<int>(parse_int(rows[r][k + 2], csv_path, r)));
    counts.rows.push_back(std::move(row));
  }
  try {
    counts.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(csv_path.string() + ": " + e.what());
  }
  return counts;
}

std::string to_json(const LambdaFit& fit) { return fit_json(fit).dump(2) + "\n"; }

LambdaFit lambda_fit_from_json(const std::string& text) {
  return parse_json(text, [](const json& j) { return fit_from(j); });
}

std::string to_json(const RopeResult& r) {
  json fits = json::array(), constrained = json::array(), edges = json::array();
  for (const auto& f : r.fits) fits.push_back(fit_json(f));
  for (const auto& f : r.constrained_fits) constrained.push_back(fit_json(f));
  for (const auto& e : r.qvalues)
    edges.push_back({{"i", e.edge.i}, {"j", e.edge.j}, {"count_at_lambda_b", e.count}, {"qvalue", e.qvalue}});
  const json doc{{"metadata",
                  {{"d", r.d},
                   {"B", r.B},
                   {"p", pair_count(r.d)},
                   {"lambdas", r.lambdas},
                   {"lambda_a", r.lambda_a},
                   {"lambda_b", r.lambda_b},
                   {"index_a", r.index_a},
                   {"index_b", r.index_b},
                   {"pi_star", r.pi_star},
                   {"first_ci", ci_json(r.first_ci)},
                   {"second_ci", ci_json(r.second_ci)},
                   {"qvalue_zero_count", r.qvalue_zero_count},
                   {"notes", r.notes}}},
                 {"final_fit", fit_json(r.final_fit)},
                 {"final_histogram", r.final_histogram.bins},
                 {"fits", fits},
                 {"constrained_fits", constrained},
                 {"edges", edges}};
  return doc.dump(2) + "\n";
}

RopeResult rope_result_from_json(const std::string& text) {
  return parse_json(text, [](const json& doc) {
    RopeResult r;
    const auto& m = doc.at("metadata");
    r.d = m.at("d").get<int>();
    r.B = m.at("B").get<int>();
    r.lambdas = m.at("lambdas").get<std::vector<double>>();
    r.lambda_a = m.at("lambda_a").get<double>();
    r.lambda_b = m.at("lambda_b").get<double>();
    r.index_a = m.at("index_a").get<std::size_t>();
    r.index_b = m.at("index_b").get<std::size_t>();
    r.pi_star = m.at("pi_star").get<double>();
    r.first_ci = ci_from(m.at("first_ci"));
    r.second_ci = ci_from(m.at("second_ci"));
    r.qvalue_zero_count = m.at("qvalue_zero_count").get<double>();
    r.notes = m.at("notes").get<std::vector<std::string>>();
    r.final_fit = fit_from(doc.at("final_fit"));
    r.final_histogram = CountHistogram(r.B, doc.at("final_histogram").get<std::vector<std::int64_t>>());
    for (const auto& f : doc.at("fits")) r.fits.push_back(fit_from(f));
    for (const auto& f : doc.at("constrained_fits")) r.constrained_fits.push_back(fit_from(f));
    for (const auto& e : doc.at("edges"))
      r.qvalues.push_back({Edge{e.at("i").get<int>(), e.at("j").get<int>()}, e.at("count_at_lambda_b").get<int>(),
                           e.at("qvalue").get<double>()});
    return r;
  });
}

void write_rope_result(const fs::path& path, const RopeResult& result) { write_text(path, to_json(result)); }

RopeResult read_rope_result(const fs::path& path) {
  try {
    return rope_result_from_json(read_text(path));
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_g_curve_csv(const fs::path& path, const RopeResult& result) {
  auto out = open_out(path);
  out << "lambda,g,pi,loglik\n";
  for (const auto& f : result.fits) {
    out << format_double(f.lambda) << ',';
    if (f.fitted)
      out << format_double(f.separation) << ',' << format_double(f.params.pi) << ',' << format_double(f.loglik);
    else
      out << "NA,NA,NA";
    out << '\n';
  }
  finish(out, path);
}

void write_report_csv(const fs::path& path, const std::vector<ReportRow>& rows) {
  auto out = open_out(path);
  out << "method,topology,signal,n,B,steps,weakness,target_fdr,replicate,achieved_fdr,tpr,f1m,n_selected,seed\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.topology << ',' << r.signal << ',' << r.n << ',' << r.B << ',' << r.steps << ','
        << format_double(r.weakness) << ',' << format_double(r.target_fdr) << ',' << r.replicate << ','
        << format_double(r.achieved_fdr) << ',' << format_double(r.tpr) << ',' << format_double(r.f1m) << ','
        << r.n_selected << ',' << r.seed << '\n';
  finish(out, path);
}

void write_kappa_csv(const fs::path& path, const std::vector<KappaRow>& rows) {
  auto out = open_out(path);
  out << "method,target_fdr,kappa,n_subsamples\n";
  for (const auto& r : rows)
    out << r.method << ',' << format_double(r.target_fdr) << ',' << (r.kappa ? format_double(*r.kappa) : "NA")
        << ',' << r.n_subsamples << '\n';
  finish(out, path);
}

}  // namespace rope::io
