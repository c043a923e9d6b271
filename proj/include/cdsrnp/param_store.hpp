#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cdsrnp/tensor.hpp"

namespace cdsrnp::ad {

// Named map of learnable tensors. Names are unique and iteration is
// lexicographic. Serialization is a versioned binary container of
// (name, shape, row-major little-endian doubles) entries; round-trips
// are bit-exact.
class ParameterStore {
 public:
  using Map = std::map<std::string, TensorPtr>;
  using const_iterator = Map::const_iterator;

  /// Create a requires_grad parameter. Throws on duplicate name.
  TensorPtr create(const std::string& name, std::vector<std::size_t> shape);

  /// Insert an existing tensor under a name (must require grad).
  void insert(const std::string& name, TensorPtr t);

  const TensorPtr& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }

  const_iterator begin() const { return params_.begin(); }
  const_iterator end() const { return params_.end(); }

  void zero_grad();

  /// Total number of scalar elements across all parameters.
  std::size_t element_count() const;

  /// Deep copy: fresh tensors with identical values, zeroed gradients.
  ParameterStore clone() const;

  /// Copy values (not gradients) from a store with identical names/shapes.
  void assign_from(const ParameterStore& other);

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static ParameterStore load(std::istream& in);
  static ParameterStore load_file(const std::string& path);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  Map params_;
};

}  // namespace cdsrnp::ad
