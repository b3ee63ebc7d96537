#pragma once

#include <doctest.h>

namespace testutil {

// Absolute-tolerance comparison: doctest accepts |lhs - want| below
// epsilon * (scale + max(|lhs|, |want|)), so placing the tolerance in the
// scale term makes the relative part negligible.
inline doctest::Approx near(double want, double tol) {
    return doctest::Approx(want).epsilon(1e-12).scale(tol * 1e12);
}

}  // namespace testutil
