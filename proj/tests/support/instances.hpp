#pragma once

#include "sfpas/family.hpp"
#include "sfpas/quiver.hpp"

#include <random>

namespace sfpas::fixtures {

/// Random rational in [-3, 3] with denominator 1, 2 or 3.
inline Rational random_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> den(1, 3);
    const int q = den(rng);
    std::uniform_int_distribution<int> num(-3 * q, 3 * q);
    return Rational(num(rng), q);
}

/// Flag chain with m <= 3, dims <= 4, entries in [-3, 3] and levels in
/// {1/2, 1, 2}. A fraction of the maps is made rank deficient on purpose
/// so both verdicts occur.
inline family::FlagChain random_flag_chain(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(1, 3), dim(1, 4), coin(0, 3), lvl(0, 2);
    family::FlagChain c;
    const int m = len(rng);
    for (int i = 0; i <= m; ++i) c.dims.push_back(static_cast<std::size_t>(dim(rng)));
    // Non-decreasing dimensions make injectivity possible.
    if (coin(rng) != 0) std::sort(c.dims.begin(), c.dims.end());
    const Rational levels[] = {Rational(1, 2), Rational(1), Rational(2)};
    for (int i = 0; i < m; ++i) {
        ExactMatrix f(c.dims[i + 1], c.dims[i]);
        for (std::size_t r = 0; r < f.rows(); ++r)
            for (std::size_t col = 0; col < f.cols(); ++col) f(r, col) = ExactScalar(random_rational(rng));
        if (coin(rng) == 0 && f.cols() > 1) {
            // Last column becomes a combination of the first two.
            const ExactScalar a(random_rational(rng));
            for (std::size_t r = 0; r < f.rows(); ++r) f(r, f.cols() - 1) = a * f(r, 0) + f(r, f.cols() > 2 ? 1 : 0);
        }
        c.maps.push_back(std::move(f));
        c.levels.push_back(levels[lvl(rng)]);
    }
    return c;
}

}  // namespace sfpas::fixtures
