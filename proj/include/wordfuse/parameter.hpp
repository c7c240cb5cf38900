#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "wordfuse/rng.hpp"
#include "wordfuse/tensor.hpp"

namespace wordfuse {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Buffers (e.g. feature normalization statistics) are stored and
  // checkpointed like parameters but never receive gradients.
  bool trainable = true;
  // Set per training stage; a frozen parameter enters the tape as a constant.
  bool frozen = false;

  void zero_grad();
};

// Name-unique, insertion-ordered parameter registry. Addresses are stable.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value, bool trainable = true);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  std::vector<Parameter*> with_prefix(const std::string& prefix);
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

// Entries drawn uniformly from [−bound, bound] in row-major order.
Parameter& add_uniform(ParameterSet& set, const std::string& name, Shape shape, double bound, Rng& rng);
// Matrix with bound 1/√cols (cols is the fan-in).
Parameter& add_matrix(ParameterSet& set, const std::string& name, std::size_t rows, std::size_t cols, Rng& rng);
Parameter& add_zeros(ParameterSet& set, const std::string& name, Shape shape);

}  // namespace wordfuse
