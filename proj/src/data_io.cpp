#include "sparsegp/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sparsegp/errors.hpp"

namespace sparsegp {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidInput("csv: column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Normalizer Normalizer::fit(const Dataset& raw) {
  Normalizer n;
  n.lower.assign(raw.dim, 0.0);
  n.scale.assign(raw.dim, 1.0);
  for (std::size_t k = 0; k < raw.dim; ++k) {
    double lo = raw.coords[k], hi = raw.coords[k];
    for (std::size_t i = 1; i < raw.size(); ++i) {
      lo = std::min(lo, raw.coords[i * raw.dim + k]);
      hi = std::max(hi, raw.coords[i * raw.dim + k]);
    }
    n.lower[k] = lo;
    n.scale[k] = hi > lo ? hi - lo : 1.0;
  }
  return n;
}

Point Normalizer::normalize(PointView raw) const {
  if (raw.size() != dim()) throw InvalidInput("normalizer: dimension mismatch");
  Point out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] - lower[k]) / scale[k];
  return out;
}

Point Normalizer::denormalize(PointView unit) const {
  if (unit.size() != dim()) throw InvalidInput("normalizer: dimension mismatch");
  Point out(unit.size());
  for (std::size_t k = 0; k < unit.size(); ++k) out[k] = unit[k] * scale[k] + lower[k];
  return out;
}

Dataset Normalizer::apply(const Dataset& raw) const {
  Dataset out = raw;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t k = 0; k < raw.dim; ++k) {
      out.coords[i * raw.dim + k] = (raw.coords[i * raw.dim + k] - lower[k]) / scale[k];
    }
  }
  return out;
}

nlohmann::json Normalizer::to_json() const { return {{"lower", lower}, {"scale", scale}}; }

Normalizer Normalizer::from_json(const nlohmann::json& j) {
  Normalizer n;
  n.lower = j.at("lower").get<std::vector<double>>();
  n.scale = j.at("scale").get<std::vector<double>>();
  if (n.lower.size() != n.scale.size()) throw InvalidInput("normalizer: length mismatch");
  return n;
}

IngestResult ingest_csv(std::istream& in, const CsvSchema& schema) {
  if (schema.coord_columns.empty()) throw InvalidInput("csv: at least one coordinate column is required");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw InvalidInput("csv: empty file");
  auto header = split_fields(line);
  for (auto& h : header) h = trim(h);

  std::vector<std::size_t> coord_idx;
  for (const auto& c : schema.coord_columns) coord_idx.push_back(column_index(header, c));
  const std::size_t value_idx = column_index(header, schema.value_column);
  const std::optional<std::size_t> noise_idx =
      schema.noise_column ? std::optional(column_index(header, *schema.noise_column)) : std::nullopt;

  IngestResult result;
  const std::size_t dim = coord_idx.size();
  std::vector<double> coords, y, noise;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++result.report.rows_read;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      result.report.malformed.push_back(
          {line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size())});
      continue;
    }
    std::vector<std::size_t> wanted(coord_idx);
    wanted.push_back(value_idx);
    if (noise_idx) wanted.push_back(*noise_idx);

    bool missing = false;
    std::string bad;
    std::vector<double> parsed;
    for (std::size_t idx : wanted) {
      const std::string f = trim(fields[idx]);
      if (is_missing(f)) {
        missing = true;
        continue;
      }
      const auto v = parse_double(f);
      if (!v) {
        bad = "column '" + header[idx] + "': cannot parse '" + f + "'";
        break;
      }
      parsed.push_back(*v);
    }
    if (!bad.empty()) {
      result.report.malformed.push_back({line_no, bad});
      continue;
    }
    if (missing) {
      result.report.dropped.push_back({line_no, "missing value"});
      continue;
    }
    if (noise_idx && !(parsed.back() > 0.0)) {
      result.report.malformed.push_back({line_no, "noise variance must be > 0"});
      continue;
    }
    coords.insert(coords.end(), parsed.begin(), parsed.begin() + static_cast<std::ptrdiff_t>(dim));
    y.push_back(parsed[dim]);
    if (noise_idx) noise.push_back(parsed[dim + 1]);
  }

  if (result.report.rows_read == 0) throw InvalidInput("csv: no data rows");
  const double malformed_fraction =
      static_cast<double>(result.report.malformed.size()) / static_cast<double>(result.report.rows_read);
  if (malformed_fraction > 0.01) {
    std::ostringstream msg;
    msg << "csv: " << result.report.malformed.size() << " of " << result.report.rows_read
        << " rows malformed (limit 1%)";
    for (std::size_t k = 0; k < std::min<std::size_t>(5, result.report.malformed.size()); ++k) {
      msg << "\n  line " << result.report.malformed[k].line << ": " << result.report.malformed[k].reason;
    }
    throw InvalidInput(msg.str());
  }
  if (y.empty()) throw InvalidInput("csv: no complete rows");

  result.raw = Dataset(dim, std::move(coords), std::move(y), std::move(noise));
  result.normalizer = Normalizer::fit(result.raw);
  result.dataset = result.normalizer.apply(result.raw);
  return result;
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("csv: cannot open " + path);
  return ingest_csv(in, schema);
}

void export_csv(const Dataset& raw, const CsvSchema& schema, std::ostream& out) {
  if (schema.coord_columns.size() != raw.dim) throw InvalidInput("export: schema dimension mismatch");
  for (const auto& c : schema.coord_columns) out << c << ',';
  out << schema.value_column;
  const bool with_noise = schema.noise_column && raw.has_point_noise();
  if (with_noise) out << ',' << *schema.noise_column;
  out << '\n';
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t k = 0; k < raw.dim; ++k) out << format_double(raw.coords[i * raw.dim + k]) << ',';
    out << format_double(raw.y[i]);
    if (with_noise) out << ',' << format_double(raw.noise[i]);
    out << '\n';
  }
}

void export_csv(const Dataset& raw, const CsvSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("export: cannot open " + path);
  export_csv(raw, schema, out);
}

Dataset subsample(const Dataset& ds, std::size_t count, std::uint64_t seed) {
  if (count == 0 || count >= ds.size()) return ds;
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<double> coords, y, noise;
  for (std::size_t i : idx) {
    const auto p = ds.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    y.push_back(ds.y[i]);
    if (ds.has_point_noise()) noise.push_back(ds.noise[i]);
  }
  return Dataset(ds.dim, std::move(coords), std::move(y), std::move(noise));
}

double SyntheticSpec::latent_value(PointView x) const {
  if (latent == LatentKind::constant) return constant;
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  return constant + amplitude * std::sin(frequency * s);
}

void SyntheticSpec::validate() const {
  if (clusters.empty()) throw InvalidInput("synthetic: at least one cluster required");
  const std::size_t dim = clusters.front().center.size();
  if (dim < 1) throw InvalidInput("synthetic: cluster center needs dim >= 1");
  for (const auto& c : clusters) {
    if (c.center.size() != dim) throw InvalidInput("synthetic: cluster dimensions differ");
    if (!(c.radius > 0.0)) throw InvalidInput("synthetic: cluster radius must be > 0");
    if (c.count < 1) throw InvalidInput("synthetic: cluster count must be >= 1");
  }
  if (!(noise_std >= 0.0)) throw InvalidInput("synthetic: noise_std must be >= 0");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t dim = spec.clusters.front().center.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords, y;
  Point x(dim);
  for (const auto& c : spec.clusters) {
    for (std::size_t n = 0; n < c.count; ++n) {
      double r2;
      do {  // rejection sampling from the unit ball
        r2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          x[k] = cube(rng);
          r2 += x[k] * x[k];
        }
      } while (r2 >= 1.0);
      for (std::size_t k = 0; k < dim; ++k) x[k] = c.center[k] + c.radius * x[k];
      coords.insert(coords.end(), x.begin(), x.end());
      const double noise = spec.noise_std > 0.0 ? spec.noise_std * normal(rng) : 0.0;
      y.push_back(spec.latent_value(x) + noise);
    }
  }
  return Dataset(dim, std::move(coords), std::move(y));
}

SyntheticSpec two_cluster_spec(std::size_t dim, std::size_t per_cluster, double cluster_radius,
                               double separation) {
  SyntheticSpec spec;
  Point a(dim, 0.0), b(dim, 0.0);
  b[0] = separation;
  spec.clusters = {{a, cluster_radius, per_cluster}, {b, cluster_radius, per_cluster}};
  spec.latent = LatentKind::sine;
  spec.constant = 0.0;
  spec.amplitude = 1.0;
  spec.frequency = 3.0 / cluster_radius;
  spec.noise_std = 0.05;
  return spec;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    for (const auto& c : j.at("clusters")) {
      spec.clusters.push_back({c.at("center").get<Point>(), c.at("radius").get<double>(),
                               c.at("count").get<std::size_t>()});
    }
    const std::string latent = j.value("latent", std::string("sine"));
    if (latent == "sine") spec.latent = LatentKind::sine;
    else if (latent == "constant") spec.latent = LatentKind::constant;
    else throw InvalidInput("synthetic: unknown latent kind " + latent);
    spec.constant = j.value("constant", 0.0);
    spec.amplitude = j.value("amplitude", 1.0);
    spec.frequency = j.value("frequency", 1.0);
    spec.noise_std = j.value("noise_std", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace sparsegp
