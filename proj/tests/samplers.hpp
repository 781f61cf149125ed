#pragma once

// Test-side generators of assessments with a known dual state.

#include <vector>

#include "qdt/desirability.hpp"
#include "qdt/random.hpp"

namespace sampler {

using namespace qdt;

/// 2*pairs gambles +-(E - Tr(E R) I) + delta I, all with Tr(G R) = delta > 0.
/// The first directions E are the symmetrized matrix units, so the gambles
/// pin R down to within ~delta and the set is maximal up to that slack.
/// delta must stay well above the solver accuracy (1e-8) for the coherence
/// check to resolve the margin.
inline std::vector<BlockHermitian> pinning_gambles(const JointStateMatrix& r, std::size_t pairs, Rng& rng,
                                                   double delta = 1e-7) {
  const auto shape = r.shape();
  auto dirs = detail::matrix_unit_directions(shape);
  while (dirs.size() < pairs) dirs.push_back(random_block_hermitian(shape, rng));
  dirs.erase(dirs.begin() + static_cast<std::ptrdiff_t>(pairs), dirs.end());
  const auto id = BlockHermitian::identity(shape.blocks, shape.n);
  std::vector<BlockHermitian> out;
  for (const auto& e : dirs) {
    const auto centred = e - r.expectation(e) * id;
    out.push_back(centred + delta * id);
    out.push_back(-1.0 * centred + delta * id);
  }
  return out;
}

/// Random trace-one positive R with m-1 blocks of dimension n.
inline JointStateMatrix random_state(std::size_t m, Index n, Rng& rng) {
  const auto p = random_simplex_point(m - 1, rng);
  std::vector<HermitianMatrix> blocks;
  for (std::size_t i = 0; i < m - 1; ++i) blocks.push_back(p[i] * random_density(n, rng));
  return JointStateMatrix::from_blocks(BlockHermitian(std::move(blocks)));
}

}  // namespace sampler
