#pragma once

#include <utility>
#include <variant>

#include "visrooms/graph/operation.hpp"

namespace visrooms {

/// Either a value or the reason an operation was rejected.
template <class T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}
  Result(RejectReason reason) : data_(reason) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<0>(data_); }
  T& value() & { return std::get<0>(data_); }
  T&& value() && { return std::get<0>(std::move(data_)); }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  RejectReason error() const { return std::get<1>(data_); }

 private:
  std::variant<T, RejectReason> data_;
};

}  // namespace visrooms
