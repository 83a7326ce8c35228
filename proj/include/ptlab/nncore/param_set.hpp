#pragma once

#include "ptlab/nncore/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace ptlab::nncore {

/// Half-open range of leading-dimension rows an optimizer may update.
/// [0, rows) is a fully trainable tensor; an empty range is frozen.
struct TrainableRows {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const noexcept { return end <= begin; }
  bool operator==(const TrainableRows&) const = default;
};

/// Named tensors with per-name trainability. Names are kept sorted so that
/// iteration (and therefore serialization and optimizer updates) is
/// deterministic.
template <typename T>
class BasicParamSet {
 public:
  struct Entry {
    BasicTensor<T> value;
    TrainableRows trainable;
  };

  void add(const std::string& name, BasicTensor<T> value, bool trainable = true);
  /// Replaces the tensor under an existing name; trainability is reset to frozen.
  void replace(const std::string& name, BasicTensor<T> value);
  void erase(const std::string& name);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const BasicTensor<T>& get(const std::string& name) const;
  BasicTensor<T>& get_mut(const std::string& name);

  void set_trainable(const std::string& name, bool trainable);
  void set_trainable_rows(const std::string& name, std::size_t begin, std::size_t end);
  TrainableRows trainable_rows(const std::string& name) const;
  bool is_trainable(const std::string& name) const { return !trainable_rows(name).empty(); }
  void freeze_all();

  std::vector<std::string> names() const;
  std::vector<std::string> trainable_names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t parameter_count() const;

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  template <typename U>
  BasicParamSet<U> cast() const {
    BasicParamSet<U> out;
    for (const auto& [name, entry] : entries_) {
      out.add(name, entry.value.template cast<U>(), false);
      out.set_trainable_rows(name, entry.trainable.begin, entry.trainable.end);
    }
    return out;
  }

 private:
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::map<std::string, Entry> entries_;
};

using ParamSet = BasicParamSet<float>;

extern template class BasicParamSet<float>;
extern template class BasicParamSet<double>;

}  // namespace ptlab::nncore
