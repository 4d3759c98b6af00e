#pragma once

// CSV ingestion with min-max normalization, export, subsampling and
// synthetic cluster datasets.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegp/assembly.hpp"

namespace sparsegp {

struct CsvSchema {
  std::vector<std::string> coord_columns;
  std::string value_column;
  std::optional<std::string> noise_column;
};

/// Per-dimension affine map of raw coordinates onto [0, 1].
struct Normalizer {
  std::vector<double> lower;
  std::vector<double> scale;

  static Normalizer fit(const Dataset& raw);
  std::size_t dim() const { return lower.size(); }
  Point normalize(PointView raw) const;
  Point denormalize(PointView unit) const;
  Dataset apply(const Dataset& raw) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
};

struct RowIssue {
  std::size_t line = 0;  ///< 1-based, header is line 1
  std::string reason;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::vector<RowIssue> dropped;    ///< missing values
  std::vector<RowIssue> malformed;  ///< wrong field count or unparsable numbers
};

struct IngestResult {
  Dataset raw;
  Dataset dataset;  ///< normalized coordinates
  Normalizer normalizer;
  IngestReport report;
};

/// Rows with missing fields are dropped and listed. Aborts with InvalidInput when
/// more than 1% of data rows are malformed or nothing usable remains.
IngestResult ingest_csv(std::istream& in, const CsvSchema& schema);
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);

/// Writes raw values in shortest round-trip form, so ingest -> export -> ingest is a fixpoint.
void export_csv(const Dataset& raw, const CsvSchema& schema, std::ostream& out);
void export_csv(const Dataset& raw, const CsvSchema& schema, const std::string& path);

/// Seeded uniform sample of `count` rows without replacement, original order kept.
Dataset subsample(const Dataset& ds, std::size_t count, std::uint64_t seed);

struct ClusterSpec {
  Point center;
  double radius = 1.0;
  std::size_t count = 0;
};

enum class LatentKind { constant, sine };

struct SyntheticSpec {
  std::vector<ClusterSpec> clusters;
  LatentKind latent = LatentKind::sine;
  double constant = 0.0;   ///< offset for both latent kinds
  double amplitude = 1.0;  ///< sine only
  double frequency = 1.0;  ///< sine only, radians per unit of summed coordinates
  double noise_std = 0.0;

  double latent_value(PointView x) const;
  void validate() const;
};

/// Points uniform in each cluster ball, observations latent + Gaussian noise.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Two equal clusters of radius `cluster_radius` whose centers are `separation` apart along axis 0.
SyntheticSpec two_cluster_spec(std::size_t dim, std::size_t per_cluster, double cluster_radius,
                               double separation);

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

}  // namespace sparsegp
