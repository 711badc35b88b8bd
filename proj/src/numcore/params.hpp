// SPDX-License-Identifier: Apache-2.0
/**
 * @file   params.hpp
 * @brief  Parameter storage partitioned into named groups. Each group owns
 *         one gradient-scaling slot; group indices are dense from zero.
 */
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "numcore/tensor.hpp"

namespace gremetl::num {

using ParamId = std::size_t;

struct ParamGroup {
  std::string name;
  std::vector<ParamId> tensors;
  std::size_t group_index = 0;
};

class ParamStore {
 public:
  std::size_t add_group(std::string name) {
    groups_.push_back({std::move(name), {}, groups_.size()});
    return groups_.size() - 1;
  }

  ParamId add(std::size_t group, std::string name, Tensor value) {
    if (group >= groups_.size())
      throw UsageError("ParamStore::add: unknown group " + std::to_string(group));
    tensors_.push_back(std::move(value));
    names_.push_back(std::move(name));
    group_of_.push_back(group);
    groups_[group].tensors.push_back(tensors_.size() - 1);
    return tensors_.size() - 1;
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t group_count() const noexcept { return groups_.size(); }

  const Tensor &value(ParamId id) const { return tensors_.at(id); }
  Tensor &value(ParamId id) { return tensors_.at(id); }
  const std::string &name(ParamId id) const { return names_.at(id); }
  std::size_t group_of(ParamId id) const { return group_of_.at(id); }
  const ParamGroup &group(std::size_t g) const { return groups_.at(g); }
  const std::vector<ParamGroup> &groups() const noexcept { return groups_; }

  /// Value snapshot, restorable with `restore`.
  std::vector<Tensor> snapshot() const { return tensors_; }
  void restore(const std::vector<Tensor> &values) {
    if (values.size() != tensors_.size())
      throw UsageError("ParamStore::restore: snapshot size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].shape() != tensors_[i].shape())
        throw ShapeError("ParamStore::restore: shape mismatch for " + names_[i]);
      tensors_[i] = values[i];
    }
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto &t : tensors_)
      n += t.size();
    return n;
  }

 private:
  std::vector<Tensor> tensors_;
  std::vector<std::string> names_;
  std::vector<std::size_t> group_of_;
  std::vector<ParamGroup> groups_;
};

/// One gradient tensor per stored parameter, aligned with ParamStore ids.
using Gradients = std::vector<Tensor>;

inline Gradients zero_gradients(const ParamStore &store) {
  Gradients g;
  g.reserve(store.size());
  for (ParamId i = 0; i < store.size(); ++i)
    g.push_back(Tensor::zeros_like(store.value(i)));
  return g;
}

} // namespace gremetl::num
