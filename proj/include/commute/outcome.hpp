#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace commute {

// Either a value or the reason it could not be produced. Used where a
// rejection is an ordinary result (a user without a home location) rather
// than an error.
template <class T, class Reason>
class Outcome {
 public:
  Outcome(T value) : state_(std::move(value)) {}
  Outcome(Reason reason) : state_(reason) {}

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    assert(ok());
    return std::get<T>(state_);
  }
  T& value() {
    assert(ok());
    return std::get<T>(state_);
  }
  const T& operator*() const { return value(); }
  const T* operator->() const { return &value(); }

  Reason reason() const {
    assert(!ok());
    return std::get<Reason>(state_);
  }

 private:
  std::variant<T, Reason> state_;
};

}  // namespace commute
