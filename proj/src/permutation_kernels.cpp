#include "hetsar/effects.hpp"
#include "hetsar/rng.hpp"

#include <algorithm>
#include <numeric>

namespace hetsar::kernels {

namespace {

// z'z is permutation invariant, so only z'Wz changes.
bool exceeds(const Eigen::VectorXd& z, const WeightMatrix& w, double scale, double observed,
             std::uint64_t seed, int b, std::vector<Eigen::Index>& order, Eigen::VectorXd& zp) {
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto rng = substream(seed, static_cast<std::uint64_t>(b));
  std::shuffle(order.begin(), order.end(), rng);
  for (Eigen::Index i = 0; i < z.size(); ++i) zp(i) = z(order[i]);
  const double stat = scale * zp.dot(w.lag(zp));
  return stat >= observed - 1e-12 * (1.0 + std::abs(observed));
}

}  // namespace

int moran_exceedances_parallel(const Eigen::VectorXd& z, const WeightMatrix& w, double observed,
                               int permutations, std::uint64_t seed) {
  const double scale = static_cast<double>(z.size()) / w.total_weight() / z.squaredNorm();
  int count = 0;
#pragma omp parallel reduction(+ : count)
  {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(z.size()));
    Eigen::VectorXd zp(z.size());
#pragma omp for schedule(static)
    for (int b = 0; b < permutations; ++b) {
      if (exceeds(z, w, scale, observed, seed, b, order, zp)) ++count;
    }
  }
  return count;
}

int moran_exceedances_serial(const Eigen::VectorXd& z, const WeightMatrix& w, double observed,
                             int permutations, std::uint64_t seed) {
  const double scale = static_cast<double>(z.size()) / w.total_weight() / z.squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(z.size()));
  Eigen::VectorXd zp(z.size());
  int count = 0;
  for (int b = 0; b < permutations; ++b) {
    if (exceeds(z, w, scale, observed, seed, b, order, zp)) ++count;
  }
  return count;
}

}  // namespace hetsar::kernels
