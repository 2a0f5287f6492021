// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace geotag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geotag::cli
