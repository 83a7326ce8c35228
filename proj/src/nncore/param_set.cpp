#include "ptlab/nncore/param_set.hpp"

#include <stdexcept>

namespace ptlab::nncore {

template <typename T>
void BasicParamSet<T>::add(const std::string& name, BasicTensor<T> value, bool trainable) {
  if (entries_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  const std::size_t rows = value.rank() == 0 ? 1 : value.shape()[0];
  entries_.emplace(name, Entry{std::move(value), trainable ? TrainableRows{0, rows} : TrainableRows{}});
}

template <typename T>
void BasicParamSet<T>::replace(const std::string& name, BasicTensor<T> value) {
  Entry& e = entry(name);
  e.value = std::move(value);
  e.trainable = {};
}

template <typename T>
void BasicParamSet<T>::erase(const std::string& name) {
  entries_.erase(name);
}

template <typename T>
const typename BasicParamSet<T>::Entry& BasicParamSet<T>::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
typename BasicParamSet<T>::Entry& BasicParamSet<T>::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
const BasicTensor<T>& BasicParamSet<T>::get(const std::string& name) const {
  return entry(name).value;
}

template <typename T>
BasicTensor<T>& BasicParamSet<T>::get_mut(const std::string& name) {
  return entry(name).value;
}

template <typename T>
void BasicParamSet<T>::set_trainable(const std::string& name, bool trainable) {
  Entry& e = entry(name);
  const std::size_t rows = e.value.rank() == 0 ? 1 : e.value.shape()[0];
  e.trainable = trainable ? TrainableRows{0, rows} : TrainableRows{};
}

template <typename T>
void BasicParamSet<T>::set_trainable_rows(const std::string& name, std::size_t begin,
                                          std::size_t end) {
  Entry& e = entry(name);
  const std::size_t rows = e.value.rank() == 0 ? 1 : e.value.shape()[0];
  if (begin > end || end > rows) {
    throw std::out_of_range("trainable row range out of bounds for " + name);
  }
  e.trainable = {begin, end};
}

template <typename T>
TrainableRows BasicParamSet<T>::trainable_rows(const std::string& name) const {
  return entry(name).trainable;
}

template <typename T>
void BasicParamSet<T>::freeze_all() {
  for (auto& [_, e] : entries_) e.trainable = {};
}

template <typename T>
std::vector<std::string> BasicParamSet<T>::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

template <typename T>
std::vector<std::string> BasicParamSet<T>::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) {
    if (!e.trainable.empty()) out.push_back(name);
  }
  return out;
}

template <typename T>
std::size_t BasicParamSet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.numel();
  return n;
}

template class BasicParamSet<float>;
template class BasicParamSet<double>;

}  // namespace ptlab::nncore
