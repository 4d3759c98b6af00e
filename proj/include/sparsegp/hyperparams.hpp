#pragma once

// Flat hyperparameter vector with a fixed, documented layout:
//
//   [0]              noise_variance
//   [1], [2]         signal_variance, length_scale   (only with a squared-exponential core)
//   next             base_radius
//   per bump (i, j), i-major:
//                    a_ij, beta_ij, r_ij, x0_ij[0 .. dim)
//   last             prior_mean
//
// Total length: 3 + (core ? 2 : 0) + n1 * n2 * (3 + dim).

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegp/assembly.hpp"
#include "sparsegp/kernel.hpp"

namespace sparsegp {

struct HyperLayout {
  std::size_t dim = 1;
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  CoreKind core = CoreKind::none;

  std::size_t size() const;
  std::size_t base_radius_index() const { return core == CoreKind::none ? 1 : 3; }
  std::size_t bump_index(std::size_t i, std::size_t j) const;
  std::size_t prior_mean_index() const { return size() - 1; }
  void validate() const;
  bool operator==(const HyperLayout&) const = default;
};

enum class ParamRole {
  positive,  ///< proposed in log space
  location,  ///< bump center coordinate, clipped to a box
  mean,      ///< unconstrained
};

class HyperparamVector {
 public:
  HyperparamVector() = default;
  HyperparamVector(HyperLayout layout, std::vector<double> values);

  /// Documented initialization: base radius half the domain diameter, centers on a
  /// coarse grid, a = beta = 1, r = diameter / n2, noise 1% of var(y), mean = mean(y).
  static HyperparamVector initial(const Dataset& ds, const HyperLayout& layout);
  /// Pack an explicit kernel description.
  static HyperparamVector from_specs(const SparsityKernelSpec& spec, const CoreKernelSpec& core,
                                     double noise_variance, double prior_mean);

  const HyperLayout& layout() const { return layout_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  double noise_variance() const { return values_[0]; }
  double base_radius() const { return values_[layout_.base_radius_index()]; }
  double prior_mean() const { return values_.back(); }
  void set_prior_mean(double m) { values_.back() = m; }

  SparsityKernelSpec sparsity_spec() const;
  CoreKernelSpec core_spec() const;

  ParamRole role(std::size_t k) const;
  /// Coordinate axis of a location parameter.
  std::size_t location_axis(std::size_t k) const;
  std::vector<std::string> names() const;
  void validate() const;

  bool operator==(const HyperparamVector&) const = default;

 private:
  HyperLayout layout_;
  std::vector<double> values_;
};

inline constexpr int kHyperparamSchemaVersion = 1;

nlohmann::json to_json(const HyperparamVector& h);
HyperparamVector hyperparams_from_json(const nlohmann::json& doc);

}  // namespace sparsegp
