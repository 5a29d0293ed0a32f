#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "corefqa/checkpoint.hpp"
#include "corefqa/rng.hpp"
#include "corefqa/tensor.hpp"

namespace corefqa {

/// Named trainable parameters in registration order. Registration order is
/// the checkpoint order, so identical seeds and configs give byte-identical
/// checkpoints.
class ParamRegistry {
 public:
  explicit ParamRegistry(std::uint64_t seed) : rng_(seed) {}

  /// Scaled-uniform ±1/sqrt(fan_in) initialization.
  Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in) {
    return add(name, init_uniform(std::move(shape), fan_in, rng_));
  }

  Tensor zeros(const std::string& name, Shape shape) {
    return add(name, Tensor::zeros(std::move(shape), true));
  }

  Tensor ones(const std::string& name, Shape shape) {
    return add(name, Tensor::ones(std::move(shape), true));
  }

  std::vector<NamedTensor>& all() { return params_; }
  const std::vector<NamedTensor>& all() const { return params_; }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    for (const NamedTensor& p : params_) out.push_back(p.value);
    return out;
  }

  void zero_grads() {
    for (NamedTensor& p : params_) p.value.zero_grad();
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const NamedTensor& p : params_) n += p.value.size();
    return n;
  }

  /// Copies values from a checkpoint into the registered tensors by name.
  void load_values(const CheckpointData& ckpt) {
    std::unordered_map<std::string, const Tensor*> by_name;
    for (const NamedTensor& p : ckpt.params) by_name[p.name] = &p.value;
    for (NamedTensor& p : params_) {
      auto it = by_name.find(p.name);
      if (it == by_name.end())
        throw TrainError("checkpoint is missing parameter \"" + p.name + "\"");
      if (it->second->shape() != p.value.shape())
        throw TrainError("checkpoint parameter \"" + p.name + "\" has shape " +
                         shape_str(it->second->shape()) + ", expected " +
                         shape_str(p.value.shape()));
      p.value.data() = it->second->data();
    }
  }

 private:
  Tensor add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name \"" + name + "\"");
    index_[name] = params_.size();
    params_.push_back({name, t});
    return t;
  }

  Rng rng_;
  std::vector<NamedTensor> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace corefqa
