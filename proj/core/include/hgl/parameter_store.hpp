#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hgl/tensor.hpp"

namespace hgl {

/// Named trainable weights with one gradient accumulator each.
///
/// Entries are kept in name order, which fixes the iteration order used by the
/// optimizer and the checkpoint writer. Addresses of stored tensors are stable
/// for the lifetime of the store, so tapes may reference them directly.
class ParameterStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  /// Registers a new parameter; the gradient starts at zero.
  Tensor& add(const std::string& name, Tensor init);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& value(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  Tensor& grad(const std::string& name);

  void zero_grad();
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Same names, shapes and bit-identical values (gradients ignored).
  bool same_values(const ParameterStore& other) const;

 private:
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::map<std::string, Entry> entries_;
};

}  // namespace hgl
