#pragma once

namespace nmm {

// Which geometry hosts each half of the embedding. The default pairs the
// w-sphere (homophily) with the Poincare ball (social rank); the Euclidean
// choices reproduce the flat-space ablations.
enum class HomSpace { euclidean, spherical };
enum class RankSpace { euclidean, hyperbolic };

struct Geometry {
  HomSpace hom = HomSpace::spherical;
  RankSpace rank = RankSpace::hyperbolic;
  double radius = 0.5;  // w, radius of the homophily sphere

  bool spherical() const { return hom == HomSpace::spherical; }
  bool hyperbolic() const { return rank == RankSpace::hyperbolic; }
};

}  // namespace nmm
