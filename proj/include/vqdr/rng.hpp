// Copyright 2026 The vqdr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <random>

#include "qcore.hpp"

namespace vqdr {

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * @brief Seedable generator that can be split into independent streams.
 *
 * `split(k)` depends only on the seed and k, never on how many draws the
 * parent has made, so per-trajectory and per-restart streams are
 * reproducible regardless of scheduling.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix_seed(seed)) {}

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    [[nodiscard]] Rng split(std::uint64_t stream) const {
        return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x632be59bd9b4e019ULL)));
    }

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    Complex complex_normal() { return {normal(), normal()}; }

    std::mt19937_64 &engine() { return engine_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

inline ComplexMatrix random_complex_matrix(Index rows, Index cols, Rng &rng) {
    ComplexMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = rng.complex_normal();
        }
    }
    return m;
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
inline ComplexMatrix random_unitary(Index dim, Rng &rng) {
    const ComplexMatrix g = random_complex_matrix(dim, dim, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < dim; ++j) {
        const Complex d = r(j, j);
        if (std::abs(d) > 0.0) {
            q.col(j) *= d / std::abs(d);
        }
    }
    return q;
}

inline StateVector random_state(Index dim, Rng &rng) {
    StateVector v(dim);
    for (Index i = 0; i < dim; ++i) {
        v(i) = rng.complex_normal();
    }
    return v.normalized();
}

/// Random full-rank density matrix from a Ginibre draw.
inline DensityMatrix random_density(Index dim, Rng &rng, Index rank = -1) {
    const Index r = rank < 1 ? dim : rank;
    const ComplexMatrix g = random_complex_matrix(dim, r, rng);
    const DensityMatrix rho = g * g.adjoint();
    return rho / rho.trace().real();
}

} // namespace vqdr
