#pragma once

#include <doctest.h>

#include "common.hpp"

namespace testkit {

// Pure relative tolerance; doctest's default Approx adds an absolute term of
// epsilon * 1.0, which swallows any error for values far from magnitude 1.
inline doctest::Approx rel_approx(double value, double rel) {
    return doctest::Approx(value).epsilon(rel).scale(0.0);
}

} // namespace testkit
