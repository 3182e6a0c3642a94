#include "rescomp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include <Eigen/Sparse>
#include <limits>
#include <ostream>

#include "rescomp/error.hpp"
#include "rescomp/parallel.hpp"
#include "rescomp/scalar_search.hpp"

namespace rescomp::analysis {

namespace {

void require_lambda(double lambda) {
  require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0, 1]");
}

void require_d(double d) { require(d >= 0.0 && std::isfinite(d), "noise variance d must be finite and >= 0"); }

// Internal-order variances with unit default.
Vector internal_variances(const OperatedWeights& w, const Vector& variances) {
  if (variances.size() == 0) return Vector::Ones(w.n());
  require(variances.size() == w.n(), "variances must have one entry per node");
  require((variances.array() > 0.0).all(), "prior variances must be positive");
  return w.to_internal(variances);
}

// T = (I - (1 - lambda) W11)^{-1} applied to the blocks we need. Keeping T explicit
// lets the 1/lambda factor of the derivative cancel analytically, so small lambda
// stays well conditioned.
struct Resolvent {
  Matrix t;    // R x R
  Matrix l11;  // lambda T
  Matrix l12;  // (1 - lambda) T W12
};

Resolvent resolvent(const OperatedWeights& w, double lambda) {
  const int r = w.r();
  const Matrix a = Matrix::Identity(r, r) - (1.0 - lambda) * w.w11();
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() > 1e-15)) fail(ErrorKind::kNumerical, "singular regular block I - (1 - lambda) W11");
  Resolvent out;
  out.t = lu.solve(Matrix::Identity(r, r));
  out.l11 = lambda * out.t;
  out.l12 = (1.0 - lambda) * (out.t * w.w12());
  return out;
}

double trace_error(const Matrix& l11, const Matrix& l12, const Vector& var, double d) {
  const int r = static_cast<int>(l11.rows());
  const double inv_r = 1.0 / r;
  double total = 0.0;
  for (int j = 0; j < r; ++j) total += var(j) * (l11.col(j).array() - inv_r).square().sum();
  for (int m = 0; m < l12.cols(); ++m) total += (var(r + m) + d) * l12.col(m).squaredNorm();
  return total;
}

}  // namespace

RegularBlocks regular_blocks(const OperatedWeights& w, double lambda) {
  require_lambda(lambda);
  auto res = resolvent(w, lambda);
  return {std::move(res.l11), std::move(res.l12)};
}

ErrorMatrixBundle error_matrices(const OperatedWeights& w, double lambda, double d, const Vector& variances) {
  require_lambda(lambda);
  require_d(d);
  const int n = w.n();
  const int r = w.r();
  const int m = w.m();
  const Matrix system = Matrix::Identity(n, n) - (1.0 - lambda) * w.permuted();
  const Matrix l = system.partialPivLu().solve(lambda * Matrix::Identity(n, n));

  ErrorMatrixBundle b;
  b.selector = Matrix::Zero(r, n);
  b.selector.leftCols(r).setIdentity();
  b.c_r = Matrix::Constant(r, r, 1.0 / r);
  b.c_rm = Matrix::Constant(r, m, 1.0 / m);
  Vector diag = internal_variances(w, variances);
  diag.tail(m).array() += d;
  b.sigma = diag.asDiagonal();
  b.e = b.selector * l - b.c_r * b.selector;
  return b;
}

double error_closed_form(const OperatedWeights& w, double lambda, double d, const Vector& variances) {
  require_lambda(lambda);
  require_d(d);
  const Vector var = internal_variances(w, variances);
  const auto res = resolvent(w, lambda);
  return trace_error(res.l11, res.l12, var, d);
}

double error_derivative(const OperatedWeights& w, double lambda, double d, const Vector& variances) {
  require_lambda(lambda);
  require_d(d);
  const Vector var = internal_variances(w, variances);
  const auto res = resolvent(w, lambda);
  const int r = w.r();
  // S_R dL/dlambda = [T (I - lambda W11 T) | -T (W11 L12 + W12)], paired column-wise with E.
  const Eigen::SparseMatrix<double> w11 = w.w11().sparseView();
  const Matrix d1 = res.t * (Matrix::Identity(r, r) - lambda * (w11 * res.t));
  const Matrix d2 = -res.t * (w11 * res.l12 + w.w12());
  const double inv_r = 1.0 / r;
  double total = 0.0;
  for (int j = 0; j < r; ++j) total += var(j) * d1.col(j).dot((res.l11.col(j).array() - inv_r).matrix());
  for (int m = 0; m < w.m(); ++m) total += (var(r + m) + d) * d2.col(m).dot(res.l12.col(m));
  return total;
}

std::vector<double> derivative_at_one_terms(const OperatedWeights& w) {
  const Matrix& base = w.base().entries();
  const double r = w.r();
  std::vector<double> a;
  a.reserve(w.r());
  for (int i : w.regular()) {
    double to_malicious = 0.0;
    for (int m : w.malicious()) to_malicious += base(i - 1, m - 1);
    a.push_back(1.0 - to_malicious / r);
  }
  return a;
}

double derivative_at_one(const OperatedWeights& w) {
  const auto a = derivative_at_one_terms(w);
  double sum = 0.0;
  for (double v : a) sum += v;
  return sum;
}

GammaDecomposition gamma_and_limits(const OperatedWeights& w) {
  const int n = w.n();
  const int r = w.r();
  const int m = w.m();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w.w11());
  if (eig.info() != Eigen::Success) fail(ErrorKind::kNumerical, "eigendecomposition of W11 failed");
  const Matrix& q = eig.eigenvectors();
  const Vector& mu = eig.eigenvalues();
  const Vector gap = (1.0 - mu.array()).matrix();
  const double cond = gap.cwiseAbs().maxCoeff() / gap.cwiseAbs().minCoeff();
  if (!(gap.minCoeff() > 0.0) || !(cond <= 1e12)) {
    fail(ErrorKind::kNumerical, "I_R - W11 is singular or ill-conditioned (condition > 1e12)");
  }
  const Vector inv_gap = gap.cwiseInverse();
  const Matrix resolvent_at_one = q * inv_gap.asDiagonal() * q.transpose();  // (I - W11)^{-1}
  const Matrix x = resolvent_at_one * w.w12();

  GammaDecomposition g;
  g.basis = Matrix::Zero(n, n);
  g.basis.topLeftCorner(r, r) = q;
  g.basis.topRightCorner(r, m) = x;
  g.basis.bottomRightCorner(m, m).setIdentity();
  g.w_eigenvalues.resize(n);
  g.w_eigenvalues << mu, Vector::Ones(m);
  g.sigma_bar.resize(n);
  g.sigma_bar << inv_gap, Vector::Zero(m);

  g.gamma1 = resolvent_at_one;
  g.gamma2 = -resolvent_at_one * x;
  g.gamma = Matrix::Zero(n, n);
  g.gamma.topLeftCorner(r, r) = g.gamma1;
  g.gamma.topRightCorner(r, m) = g.gamma2;
  g.w_bar = Matrix::Zero(n, n);
  g.w_bar.topRightCorner(r, m) = x;
  g.w_bar.bottomRightCorner(m, m).setIdentity();
  return g;
}

double derivative_limit_zero(const GammaDecomposition& g, const OperatedWeights& w, double d,
                             const Vector& variances) {
  require_d(d);
  const int r = w.r();
  require(g.gamma1.rows() == r && g.gamma2.cols() == w.m(), "gamma decomposition does not match weights");
  const Vector var = internal_variances(w, variances);
  const Matrix x = g.w_bar.topRightCorner(r, w.m());
  double total = 0.0;
  for (int j = 0; j < r; ++j) total -= var(j) * g.gamma1.col(j).sum() / r;
  for (int m = 0; m < w.m(); ++m) total += (var(r + m) + d) * g.gamma2.col(m).dot(x.col(m));
  return total;
}

double error_partial_d(const OperatedWeights& w, double lambda) {
  require_lambda(lambda);
  return resolvent(w, lambda).l12.squaredNorm();
}

Decomposition decompose_error(const OperatedWeights& w, double lambda, double d, const Vector& variances) {
  require_lambda(lambda);
  require_d(d);
  if (w.m() != 1) fail(ErrorKind::kUnsupported, "error decomposition needs exactly one malicious node");
  const Vector var = internal_variances(w, variances);
  const auto res = resolvent(w, lambda);
  const int r = w.r();
  Decomposition out;
  out.collaboration = (var(r) + d) * res.l12.col(0).squaredNorm();
  out.competition = trace_error(res.l11, Matrix(r, 0), var, 0.0);
  return out;
}

double baseline_error(BaselineKind kind, Counts c, double d) {
  require_d(d);
  switch (kind) {
    case BaselineKind::kConsensusOutliers:
      require(c.n >= 1 && c.m >= 0 && c.m <= c.n, "consensus_outliers needs 0 <= m <= n, n >= 1");
      return d * c.m / c.n;
    case BaselineKind::kConsensusMalicious:
      require(c.r >= 1 && c.m >= 1, "consensus_malicious needs r >= 1 and m >= 1");
      require(c.n == 0 || c.n == c.r + c.m, "consensus_malicious needs r + m = n");
      return static_cast<double>(c.r) / c.m + c.r * d / c.m + 1.0;
    case BaselineKind::kFjFullCompetition:
      require(c.r >= 1, "fj_full_competition needs r >= 1");
      require(c.n == 0 || c.m == 0 || c.n == c.r + c.m, "fj_full_competition needs r + m = n");
      return c.r - 1.0;
  }
  fail(ErrorKind::kPrecondition, "unknown baseline kind");
}

double dominance_threshold(int r, int m) {
  require(r >= 1 && m >= 1, "dominance threshold needs r >= 1 and m >= 1");
  return m * (1.0 - 2.0 / r) - 1.0;
}

ErrorCurve error_curve(const OperatedWeights& w, double d, const std::vector<double>& lambdas,
                       const Vector& variances) {
  require(std::is_sorted(lambdas.begin(), lambdas.end()) &&
              std::adjacent_find(lambdas.begin(), lambdas.end()) == lambdas.end(),
          "lambda grid must be strictly increasing");
  const auto values = parallel_map(lambdas.size(), [&](std::size_t k) {
    return std::pair{error_closed_form(w, lambdas[k], d, variances), error_derivative(w, lambdas[k], d, variances)};
  });
  ErrorCurve curve;
  curve.lambdas = lambdas;
  for (const auto& [e, de] : values) {
    if (!std::isfinite(e) || !std::isfinite(de)) fail(ErrorKind::kNumerical, "non-finite value on error curve");
    curve.errors.push_back(e);
    curve.derivatives.push_back(de);
  }
  return curve;
}

std::vector<double> lambda_grid(int size) {
  require(size >= 2, "lambda grid needs at least 2 points");
  constexpr double lo = 1e-3;
  constexpr double hi = 1.0 - 1e-3;
  std::vector<double> grid(size);
  for (int k = 0; k < size; ++k) grid[k] = lo + (hi - lo) * k / (size - 1);
  return grid;
}

LambdaOptimum optimize_lambda(const OperatedWeights& w, double d, int grid_size, double tol, const Vector& variances) {
  require(grid_size >= 16, "optimize_lambda needs grid_size >= 16");
  require(tol > 0.0, "tolerance must be positive");
  LambdaOptimum out;
  out.curve = error_curve(w, d, lambda_grid(grid_size), variances);
  const auto& lam = out.curve.lambdas;
  const auto& err = out.curve.errors;
  const auto best = static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin());
  const double lo = lam[best == 0 ? 0 : best - 1];
  const double hi = lam[std::min(best + 1, lam.size() - 1)];
  auto slope = [&](double l) { return error_derivative(w, l, d, variances); };
  const double refined =
      slope(lo) < 0.0 && slope(hi) > 0.0
          ? bisect_root(slope, lo, hi, std::min(tol, 1e-12))
          : golden_section_minimize([&](double l) { return error_closed_form(w, l, d, variances); }, lo, hi, tol);
  out.lambda_star = error_closed_form(w, refined, d, variances) <= err[best] ? refined : lam[best];
  if (!(out.lambda_star > 0.0 && out.lambda_star < 1.0)) fail(ErrorKind::kNumerical, "lambda* outside (0, 1)");
  out.curve.lambda_star = out.lambda_star;
  return out;
}

std::vector<double> critical_points(const OperatedWeights& w, double d, int grid_size, const Vector& variances) {
  require(grid_size >= 64, "critical_points needs grid_size >= 64");
  // The grid is closed at lambda = 1, where the derivative is positive, and opened
  // towards 0 with a tiny lambda standing in for the negative limit.
  std::vector<double> grid = lambda_grid(grid_size);
  grid.insert(grid.begin(), 1e-9);
  grid.push_back(1.0);
  const auto deriv = parallel_map(grid.size(), [&](std::size_t k) { return error_derivative(w, grid[k], d, variances); });
  auto g = [&](double l) { return error_derivative(w, l, d, variances); };
  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (deriv[k] == 0.0) {
      roots.push_back(grid[k]);
    } else if ((deriv[k] < 0.0) != (deriv[k + 1] < 0.0) && deriv[k + 1] != 0.0) {
      roots.push_back(bisect_root(g, grid[k], grid[k + 1], 1e-8));
    }
  }
  return roots;
}

void write_curve_csv(std::ostream& os, const ErrorCurve& curve) {
  const auto precision = os.precision();
  os << "lambda,error,derivative\n" << std::setprecision(17);
  for (std::size_t k = 0; k < curve.lambdas.size(); ++k)
    os << curve.lambdas[k] << ',' << curve.errors[k] << ',' << curve.derivatives[k] << '\n';
  os.precision(precision);
}

void write_decomposition_csv(std::ostream& os, const std::vector<double>& lambdas,
                             const std::vector<Decomposition>& rows) {
  require(lambdas.size() == rows.size(), "decomposition rows must match the lambda grid");
  const auto precision = os.precision();
  os << "lambda,collaboration,competition,total\n" << std::setprecision(17);
  for (std::size_t k = 0; k < rows.size(); ++k)
    os << lambdas[k] << ',' << rows[k].collaboration << ',' << rows[k].competition << ',' << rows[k].total() << '\n';
  os.precision(precision);
}

}  // namespace rescomp::analysis
