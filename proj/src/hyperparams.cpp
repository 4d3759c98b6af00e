#include "sparsegp/hyperparams.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsegp/errors.hpp"

namespace sparsegp {

std::size_t HyperLayout::size() const {
  return 3 + (core == CoreKind::none ? 0 : 2) + n1 * n2 * (3 + dim);
}

std::size_t HyperLayout::bump_index(std::size_t i, std::size_t j) const {
  return base_radius_index() + 1 + (i * n2 + j) * (3 + dim);
}

void HyperLayout::validate() const {
  if (dim < 1 || n1 < 1 || n2 < 1) throw InvalidInput("hyperparameter layout: dim, n1, n2 must be >= 1");
}

HyperparamVector::HyperparamVector(HyperLayout layout, std::vector<double> values)
    : layout_(layout), values_(std::move(values)) {
  layout_.validate();
  if (values_.size() != layout_.size()) {
    throw InvalidInput("hyperparameter vector has " + std::to_string(values_.size()) +
                       " entries, layout needs " + std::to_string(layout_.size()));
  }
}

HyperparamVector HyperparamVector::initial(const Dataset& ds, const HyperLayout& layout) {
  ds.validate();
  if (layout.dim != ds.dim) throw InvalidInput("layout dimension does not match dataset");
  layout.validate();
  const DomainBox box = ds.bounding_box();
  const double diameter = box.diameter();
  const double n = static_cast<double>(ds.size());
  const double mean = std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : ds.y) var += (v - mean) * (v - mean);
  var /= n;
  // Constant observations leave only rounding noise in var.
  const double safe_var = var > 1e-12 * std::max(1.0, mean * mean) ? var : 1.0;

  std::vector<double> v(layout.size(), 0.0);
  v[0] = 0.01 * safe_var;
  if (layout.core != CoreKind::none) {
    v[1] = safe_var;
    v[2] = 0.25 * diameter;
  }
  v[layout.base_radius_index()] = 0.5 * diameter;

  const std::size_t total = layout.n1 * layout.n2;
  const auto per_axis = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(total), 1.0 / static_cast<double>(layout.dim)) - 1e-9));
  for (std::size_t i = 0; i < layout.n1; ++i) {
    for (std::size_t j = 0; j < layout.n2; ++j) {
      const std::size_t base = layout.bump_index(i, j);
      v[base] = 1.0;
      v[base + 1] = 1.0;
      v[base + 2] = diameter / static_cast<double>(layout.n2);
      std::size_t cell = i * layout.n2 + j;
      for (std::size_t k = 0; k < layout.dim; ++k) {
        const std::size_t idx = cell % per_axis;
        cell /= per_axis;
        const double t = (static_cast<double>(idx) + 0.5) / static_cast<double>(per_axis);
        v[base + 3 + k] = box.lower[k] + t * (box.upper[k] - box.lower[k]);
      }
    }
  }
  v.back() = mean;
  return HyperparamVector(layout, std::move(v));
}

HyperparamVector HyperparamVector::from_specs(const SparsityKernelSpec& spec, const CoreKernelSpec& core,
                                              double noise_variance, double prior_mean) {
  spec.validate();
  HyperLayout layout{spec.dim(), spec.num_sums(), spec.bumps_per_sum(), core.kind};
  std::vector<double> v(layout.size(), 0.0);
  v[0] = noise_variance;
  if (core.kind != CoreKind::none) {
    v[1] = core.signal_variance;
    v[2] = core.length_scale;
  }
  v[layout.base_radius_index()] = spec.base_radius;
  for (std::size_t i = 0; i < layout.n1; ++i) {
    for (std::size_t j = 0; j < layout.n2; ++j) {
      const BumpParams& b = spec.sums[i][j];
      const std::size_t base = layout.bump_index(i, j);
      v[base] = b.amplitude;
      v[base + 1] = b.shape;
      v[base + 2] = b.radius;
      std::copy(b.center.begin(), b.center.end(), v.begin() + static_cast<std::ptrdiff_t>(base + 3));
    }
  }
  v.back() = prior_mean;
  return HyperparamVector(layout, std::move(v));
}

SparsityKernelSpec HyperparamVector::sparsity_spec() const {
  SparsityKernelSpec spec;
  spec.base_radius = base_radius();
  spec.sums.resize(layout_.n1);
  for (std::size_t i = 0; i < layout_.n1; ++i) {
    for (std::size_t j = 0; j < layout_.n2; ++j) {
      const std::size_t base = layout_.bump_index(i, j);
      BumpParams b;
      b.amplitude = values_[base];
      b.shape = values_[base + 1];
      b.radius = values_[base + 2];
      b.center.assign(values_.begin() + static_cast<std::ptrdiff_t>(base + 3),
                      values_.begin() + static_cast<std::ptrdiff_t>(base + 3 + layout_.dim));
      spec.sums[i].push_back(std::move(b));
    }
  }
  return spec;
}

CoreKernelSpec HyperparamVector::core_spec() const {
  CoreKernelSpec core;
  core.kind = layout_.core;
  if (core.kind != CoreKind::none) {
    core.signal_variance = values_[1];
    core.length_scale = values_[2];
  }
  return core;
}

ParamRole HyperparamVector::role(std::size_t k) const {
  if (k == values_.size() - 1) return ParamRole::mean;
  const std::size_t first_bump = layout_.base_radius_index() + 1;
  if (k < first_bump) return ParamRole::positive;
  const std::size_t offset = (k - first_bump) % (3 + layout_.dim);
  return offset < 3 ? ParamRole::positive : ParamRole::location;
}

std::size_t HyperparamVector::location_axis(std::size_t k) const {
  const std::size_t first_bump = layout_.base_radius_index() + 1;
  return (k - first_bump) % (3 + layout_.dim) - 3;
}

std::vector<std::string> HyperparamVector::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  out.emplace_back("noise_variance");
  if (layout_.core != CoreKind::none) {
    out.emplace_back("signal_variance");
    out.emplace_back("length_scale");
  }
  out.emplace_back("base_radius");
  for (std::size_t i = 0; i < layout_.n1; ++i) {
    for (std::size_t j = 0; j < layout_.n2; ++j) {
      const std::string tag = "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      out.push_back("a" + tag);
      out.push_back("beta" + tag);
      out.push_back("r" + tag);
      for (std::size_t k = 0; k < layout_.dim; ++k) out.push_back("x0" + tag + "[" + std::to_string(k) + "]");
    }
  }
  out.emplace_back("prior_mean");
  return out;
}

void HyperparamVector::validate() const {
  if (values_.size() != layout_.size()) throw InvalidInput("hyperparameter vector length mismatch");
  const auto labels = names();
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) throw InvalidInput("hyperparameter " + labels[k] + " is not finite");
    if (role(k) != ParamRole::positive) continue;
    // Amplitudes may be zero; everything else positivity-constrained must be strictly positive.
    const bool amplitude = k > layout_.base_radius_index() &&
                           (k - layout_.base_radius_index() - 1) % (3 + layout_.dim) == 0;
    if (amplitude ? !(values_[k] >= 0.0) : !(values_[k] > 0.0)) {
      throw InvalidInput("hyperparameter " + labels[k] + " must be positive");
    }
  }
}

nlohmann::json to_json(const HyperparamVector& h) {
  const auto& l = h.layout();
  nlohmann::json doc;
  doc["schema_version"] = kHyperparamSchemaVersion;
  doc["layout"] = {{"dim", l.dim}, {"n1", l.n1}, {"n2", l.n2}, {"core", to_string(l.core)}};
  doc["names"] = h.names();
  doc["values"] = h.values();
  return doc;
}

HyperparamVector hyperparams_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kHyperparamSchemaVersion) {
      throw InvalidInput("unsupported hyperparameter schema version " + std::to_string(version));
    }
    const auto& l = doc.at("layout");
    HyperLayout layout{l.at("dim").get<std::size_t>(), l.at("n1").get<std::size_t>(),
                       l.at("n2").get<std::size_t>(),
                       core_kind_from_string(l.at("core").get<std::string>())};
    HyperparamVector h(layout, doc.at("values").get<std::vector<double>>());
    h.validate();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed hyperparameter document: ") + e.what());
  }
}

}  // namespace sparsegp
