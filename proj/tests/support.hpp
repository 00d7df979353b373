// Helpers shared by the unit tests.
#pragma once

#include "prefk/core.hpp"

#include <gtest/gtest.h>

namespace prefk::testing {

/// Runs `f` and returns the kind of the prefk::Error it throws.
template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no prefk::Error thrown";
  return ErrorKind::NumericalFailure;
}

}  // namespace prefk::testing
