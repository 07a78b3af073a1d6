#pragma once

#include "dwg/core.hpp"
#include "dwg/spatial.hpp"

// Normal initialization strategies. All of them assign a unit normal to
// every point; none of them attempts global consistency, which is the
// diffusion loop's job.

namespace dwg {

enum class InitMode { Random, Pca, GaussMap };

// Normals drawn uniformly on the unit sphere, deterministic per seed.
void init_random(PointCloud& cloud, RngSeed seed);

// Normal of the least-squares plane through each point's k nearest
// neighbors. Signs are chosen deterministically but are locally arbitrary.
// Rank-deficient neighborhoods fall back to a random direction and are
// reported through `degenerate` when given.
void init_pca(PointCloud& cloud, const KnnIndex& index, int k = 15,
              std::vector<std::int32_t>* degenerate = nullptr);

// Projects each point of a centered cloud onto the unit sphere and uses the
// direction as its normal. Points at the origin get +z and are reported
// through `at_origin` when given.
void init_gauss_map(PointCloud& cloud, std::vector<std::int32_t>* at_origin = nullptr);

}  // namespace dwg
