// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support/gradcheck.hpp"

using namespace mimicbench;

// The acceptance suite runs the full 20-trial sweep; here a smaller count
// keeps the unit run quick while still exercising every op.
TEST_CASE("every differentiable op passes central finite differences") {
  for (const auto& check : testing::all_grad_checks()) {
    CAPTURE(check.name);
    const double worst = testing::run_grad_suite(check.trial, 8, 0xABCD1234u);
    CHECK(worst < 1e-4);
  }
}
