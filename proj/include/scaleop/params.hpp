#pragma once

#include "scaleop/autodiff.hpp"

namespace scaleop {

/// Ordered, named collection of trainable tensors. The order is the contract
/// between checkpoints, tape registration and the optimizer state.
class ParamStore {
 public:
  void add(std::string name, ad::Tensor value) {
    for (const auto& it : items_)
      require(it.first != name, "params: duplicate name " + name);
    items_.emplace_back(std::move(name), std::move(value));
  }

  ad::Tensor& at(const std::string& name) {
    for (auto& it : items_)
      if (it.first == name) return it.second;
    throw Error("params: unknown name " + name);
  }
  const ad::Tensor& at(const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }
  bool has(const std::string& name) const {
    for (const auto& it : items_)
      if (it.first == name) return true;
    return false;
  }

  size_t size() const { return items_.size(); }
  const std::pair<std::string, ad::Tensor>& item(size_t i) const {
    return items_.at(i);
  }
  std::pair<std::string, ad::Tensor>& item(size_t i) { return items_.at(i); }

  /// Total number of real degrees of freedom (complex entries count twice).
  Index dof() const {
    Index n = 0;
    for (const auto& it : items_)
      n += it.second.numel() * (it.second.is_complex() ? 2 : 1);
    return n;
  }

  /// Register every tensor on a tape, in order.
  std::vector<ad::Var> register_on(ad::Tape& tape, bool trainable = true) const {
    std::vector<ad::Var> vars;
    vars.reserve(items_.size());
    for (const auto& it : items_)
      vars.push_back(trainable ? tape.param(it.second) : tape.input(it.second));
    return vars;
  }

 private:
  std::vector<std::pair<std::string, ad::Tensor>> items_;
};

}  // namespace scaleop
