#include "wordfuse/parameter.hpp"

#include <algorithm>
#include <cmath>

#include "wordfuse/error.hpp"

namespace wordfuse {

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  std::fill(grad.storage().begin(), grad.storage().end(), 0.0);
}

Parameter& ParameterSet::add(const std::string& name, Tensor value, bool trainable) {
  if (index_.count(name)) fail(ErrorKind::kConfig, "duplicate parameter name '" + name + "'");
  index_[name] = params_.size();
  Parameter& p = params_.emplace_back();
  p.name = name;
  p.grad = Tensor(value.shape());
  p.value = std::move(value);
  p.trainable = trainable;
  return p;
}

Parameter& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::kConfig, "unknown parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::kConfig, "unknown parameter '" + name + "'");
  return params_[it->second];
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::vector<Parameter*> ParameterSet::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p.name.rfind(prefix, 0) == 0) out.push_back(&p);
  }
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Parameter& add_uniform(ParameterSet& set, const std::string& name, Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = rng.uniform(-bound, bound);
  return set.add(name, std::move(t));
}

Parameter& add_matrix(ParameterSet& set, const std::string& name, std::size_t rows, std::size_t cols, Rng& rng) {
  return add_uniform(set, name, {rows, cols}, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

Parameter& add_zeros(ParameterSet& set, const std::string& name, Shape shape) { return set.add(name, Tensor(std::move(shape))); }

}  // namespace wordfuse
