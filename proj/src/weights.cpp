#include "hetsar/weights.hpp"

#include "hetsar/errors.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>

namespace hetsar {

namespace {

constexpr double kRowSumTol = 1e-12;
// Dense eigensolve above this size is skipped; log|A| falls back to LU.
constexpr Eigen::Index kMaxSpectrumSize = 5000;

bool is_symmetric(const WeightMatrix::Sparse& m) {
  const WeightMatrix::Sparse t = m.transpose();
  const WeightMatrix::Sparse diff = m - t;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (WeightMatrix::Sparse::InnerIterator it(diff, k); it; ++it) {
      if (std::abs(it.value()) > 1e-14 * (1.0 + std::abs(m.coeff(it.row(), it.col())))) {
        return false;
      }
    }
  }
  return true;
}

Eigen::VectorXd row_sums(const WeightMatrix::Sparse& m) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (WeightMatrix::Sparse::InnerIterator it(m, k); it; ++it) s(it.row()) += it.value();
  }
  return s;
}

}  // namespace

WeightMatrix::WeightMatrix(Sparse entries, bool standardized, bool symmetric_base,
                           Eigen::VectorXd base_row_sums)
    : entries_(std::move(entries)),
      standardized_(standardized),
      symmetric_base_(symmetric_base),
      base_row_sums_(std::move(base_row_sums)) {
  entries_.makeCompressed();
  if (entries_.rows() != entries_.cols()) throw InputError("weight matrix must be square");
  if (entries_.rows() < 2) throw InputError("weight matrix needs at least 2 units");
  for (int k = 0; k < entries_.outerSize(); ++k) {
    for (Sparse::InnerIterator it(entries_, k); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        throw InputError("weight matrix entries must be finite and nonnegative (row " +
                         std::to_string(it.row()) + ")");
      }
      if (it.row() == it.col() && it.value() != 0.0) {
        throw InputError("weight matrix diagonal must be zero (unit " + std::to_string(it.row()) +
                         ")");
      }
    }
  }
  if (standardized_) {
    const Eigen::VectorXd s = row_sums(entries_);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) != 0.0 && std::abs(s(i) - 1.0) > kRowSumTol) {
        throw InputError("standardized weight matrix row " + std::to_string(i) +
                         " does not sum to 1");
      }
    }
    if (symmetric_base_ && base_row_sums_.size() != n()) {
      throw InputError("symmetric-base standardized matrix needs its base row sums");
    }
  }
}

std::optional<RhoBounds> WeightMatrix::bounds() const {
  if (!eigenvalues_) return std::nullopt;
  const double lmin = (*eigenvalues_)(0);
  const double lmax = (*eigenvalues_)(eigenvalues_->size() - 1);
  RhoBounds b;
  b.lo = lmin < 0.0 ? 1.0 / lmin + kRhoBoundEpsilon : -1.0 + kRhoBoundEpsilon;
  b.hi = lmax > 0.0 ? 1.0 / lmax - kRhoBoundEpsilon : 1.0 - kRhoBoundEpsilon;
  return b;
}

double WeightMatrix::total_weight() const { return entries_.sum(); }

Eigen::Index WeightMatrix::neighbor_count(Eigen::Index i) const {
  Eigen::Index c = 0;
  for (Sparse::InnerIterator it(entries_, static_cast<int>(i)); it; ++it) {
    if (it.value() != 0.0) ++c;
  }
  return c;
}

WeightMatrix WeightMatrix::with_spectrum() const {
  WeightMatrix out = *this;
  if (standardized_ && symmetric_base_ && n() <= kMaxSpectrumSize && !eigenvalues_) {
    out.eigenvalues_ = similarity_eigenvalues(*this);
  }
  return out;
}

Eigen::VectorXd similarity_eigenvalues(const WeightMatrix& w) {
  if (!w.standardized() || !w.symmetric_base()) {
    throw InputError("similarity spectrum requires a standardized W with symmetric base");
  }
  const Eigen::VectorXd sqrt_d = w.base_row_sums().cwiseSqrt();
  // S = D^1/2 W D^-1/2 = D^-1/2 C D^-1/2, symmetric.
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(w.n(), w.n());
  const auto& e = w.entries();
  for (int k = 0; k < e.outerSize(); ++k) {
    for (WeightMatrix::Sparse::InnerIterator it(e, k); it; ++it) {
      s(it.row(), it.col()) = sqrt_d(it.row()) * it.value() / sqrt_d(it.col());
    }
  }
  s = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen decomposition of W failed");
  return solver.eigenvalues();
}

WeightMatrix row_standardize(const WeightMatrix& w) {
  if (w.standardized()) return w.with_spectrum();
  const Eigen::VectorXd sums = row_sums(w.entries());
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (sums(i) <= 0.0) {
      throw InputError("unit " + std::to_string(i) + " has no neighbors (isolated unit)");
    }
  }
  const bool symmetric = is_symmetric(w.entries());
  WeightMatrix::Sparse scaled = sums.cwiseInverse().asDiagonal() * w.entries();
  WeightMatrix out(std::move(scaled), true, symmetric,
                   symmetric ? sums : Eigen::VectorXd());
  return out.with_spectrum();
}

WeightMatrix build_rook_grid(int rows, int cols) {
  if (rows < 1 || cols < 1 || static_cast<long>(rows) * cols < 2) {
    throw InputError("rook grid needs rows*cols >= 2");
  }
  const int n = rows * cols;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 4);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = r * cols + c;
      if (r > 0) triplets.emplace_back(i, i - cols, 1.0);
      if (r + 1 < rows) triplets.emplace_back(i, i + cols, 1.0);
      if (c > 0) triplets.emplace_back(i, i - 1, 1.0);
      if (c + 1 < cols) triplets.emplace_back(i, i + 1, 1.0);
    }
  }
  WeightMatrix::Sparse m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return row_standardize(WeightMatrix(std::move(m), false, true));
}

WeightMatrix build_inverse_distance_squared(std::span<const Point> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 2) throw InputError("inverse-distance weights need at least 2 points");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = points[i].x - points[j].x;
      const double dy = points[i].y - points[j].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) {
        throw InputError("duplicate points " + std::to_string(i) + " and " + std::to_string(j));
      }
      triplets.emplace_back(i, j, 1.0 / d2);
    }
  }
  WeightMatrix::Sparse m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return row_standardize(WeightMatrix(std::move(m), false, true));
}

WeightMatrix parse_adjacency(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_adjacency(in);
}

WeightMatrix load_adjacency(std::istream& in) {
  std::string line;
  long n = -1;
  std::size_t line_no = 0;
  std::vector<Eigen::Triplet<double>> triplets;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (n < 0) {
      if (line.compare(first, 2, "n=") != 0) {
        throw InputError("adjacency document must start with n=<count>");
      }
      const char* b = line.data() + first + 2;
      const char* e = line.data() + line.size();
      while (e > b && (e[-1] == '\r' || e[-1] == ' ')) --e;
      auto [ptr, ec] = std::from_chars(b, e, n);
      if (ec != std::errc() || ptr != e || n < 2) {
        throw InputError("invalid unit count in adjacency header");
      }
      continue;
    }
    std::istringstream fields(line);
    long i = -1, j = -1;
    double wgt = 1.0;
    if (!(fields >> i >> j)) {
      throw InputError("adjacency line " + std::to_string(line_no) + ": expected '<i> <j> [weight]'");
    }
    if (!(fields >> wgt)) wgt = 1.0;
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw InputError("adjacency line " + std::to_string(line_no) + ": index out of range");
    }
    if (i == j) {
      throw InputError("adjacency line " + std::to_string(line_no) + ": self-loop on unit " +
                       std::to_string(i));
    }
    if (!(wgt > 0.0) || !std::isfinite(wgt)) {
      throw InputError("adjacency line " + std::to_string(line_no) + ": weight must be positive");
    }
    triplets.emplace_back(i, j, wgt);
    triplets.emplace_back(j, i, wgt);
  }
  if (n < 0) throw InputError("adjacency document is empty");
  WeightMatrix::Sparse m(n, n);
  // Repeated edges keep the last weight rather than summing.
  m.setFromTriplets(triplets.begin(), triplets.end(), [](double, double b) { return b; });
  return row_standardize(WeightMatrix(std::move(m), false, true));
}

RhoBounds eigen_bounds(const WeightMatrix& w) {
  if (auto b = w.bounds()) return *b;
  const WeightMatrix with = w.with_spectrum();
  if (auto b = with.bounds()) return *b;
  return {-1.0 + kRhoBoundEpsilon, 1.0 - kRhoBoundEpsilon};
}

}  // namespace hetsar
