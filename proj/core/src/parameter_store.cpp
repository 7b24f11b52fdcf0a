#include "hgl/parameter_store.hpp"

#include <cstring>

namespace hgl {

Tensor& ParameterStore::add(const std::string& name, Tensor init) {
  if (name.empty()) throw ContractError("parameter name must be non-empty");
  if (contains(name)) throw ContractError("duplicate parameter name: " + name);
  Tensor grad(init.shape(), std::vector<double>(init.size(), 0.0));
  auto [it, _] = entries_.emplace(name, Entry{std::move(init), std::move(grad)});
  return it->second.value;
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

ParameterStore::Entry& ParameterStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParameterStore::value(const std::string& name) { return entry(name).value; }
const Tensor& ParameterStore::grad(const std::string& name) const { return entry(name).grad; }
Tensor& ParameterStore::grad(const std::string& name) { return entry(name).grad; }

void ParameterStore::zero_grad() {
  for (auto& [_, e] : entries_) {
    for (auto& g : e.grad.data()) g = 0.0;
  }
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    const Tensor& x = a->second.value;
    const Tensor& y = b->second.value;
    if (a->first != b->first || x.shape() != y.shape()) return false;
    if (std::memcmp(x.data().data(), y.data().data(), x.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace hgl
