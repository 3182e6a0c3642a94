#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "rescomp/graphkit.hpp"

// Closed-form consensus error of FJ dynamics under constant-state malicious agents.
//
// Conventions: matrices are in the internal [R | M] order of OperatedWeights.
// `variances` are per-node prior variances in user labels; an empty vector means
// unit variances. The covariance of the corrupted priors is diag(variances) + d V,
// where V selects the malicious block.
namespace rescomp::analysis {

using graphkit::OperatedWeights;

// Regular rows of L = lambda (I - (1 - lambda) W')^{-1}, from the R x R system only.
struct RegularBlocks {
  Matrix l11;  // R x R
  Matrix l12;  // R x M
};

RegularBlocks regular_blocks(const OperatedWeights& w, double lambda);

// E = S_R L - C_R S_R and friends, assembled densely for e_R = tr(Sigma E^T E).
struct ErrorMatrixBundle {
  Matrix e;         // R x N
  Matrix selector;  // S_R = [I_R | 0]
  Matrix c_r;       // (1/R) 1 1^T
  Matrix c_rm;      // (1/M) 1_R 1_M^T
  Matrix sigma;     // diag(variances) + d V
};

ErrorMatrixBundle error_matrices(const OperatedWeights& w, double lambda, double d, const Vector& variances = {});

double error_closed_form(const OperatedWeights& w, double lambda, double d, const Vector& variances = {});

// (1/lambda) tr(Sigma L^T (I - W^T L^T) S_R^T E). The true derivative of e_R is
// twice this value.
double error_derivative(const OperatedWeights& w, double lambda, double d, const Vector& variances = {});

// a_i = 1 - (1/R) sum_{m in M} W_im for each regular node, in regular-label order.
std::vector<double> derivative_at_one_terms(const OperatedWeights& w);
double derivative_at_one(const OperatedWeights& w);

struct GammaDecomposition {
  Matrix gamma;              // lim_{lambda -> 0+} dL/dlambda, N x N
  Matrix gamma1;             // R x R
  Matrix gamma2;             // R x M
  Matrix w_bar;              // lim_{lambda -> 0+} L
  Matrix basis;              // eigenvectors of W' (columns); also diagonalize Gamma
  Vector w_eigenvalues;      // eigenvalues of W' matching `basis`
  Vector sigma_bar;          // eigenvalues of Gamma matching `basis`
};

GammaDecomposition gamma_and_limits(const OperatedWeights& w);

// lim_{lambda -> 0+} error_derivative. With unit variances, d = 0 and one malicious
// node this is tr(-Gamma1^T C_R) + tr(Gamma2^T C_RM).
double derivative_limit_zero(const GammaDecomposition& g, const OperatedWeights& w, double d = 0.0,
                             const Vector& variances = {});

// d e_R / d d = tr(L12^T L12).
double error_partial_d(const OperatedWeights& w, double lambda);

struct Decomposition {
  double collaboration = 0.0;
  double competition = 0.0;
  double total() const { return collaboration + competition; }
};

// Single malicious node only.
Decomposition decompose_error(const OperatedWeights& w, double lambda, double d, const Vector& variances = {});

enum class BaselineKind { kConsensusOutliers, kConsensusMalicious, kFjFullCompetition };

struct Counts {
  int n = 0;
  int r = 0;
  int m = 0;
};

double baseline_error(BaselineKind kind, Counts counts, double d);

// d above this value makes plain consensus worse than FJ with lambda = 1.
double dominance_threshold(int r, int m);

struct ErrorCurve {
  std::vector<double> lambdas;
  std::vector<double> errors;
  std::vector<double> derivatives;
  std::optional<double> lambda_star;
  std::vector<double> critical_points;
};

ErrorCurve error_curve(const OperatedWeights& w, double d, const std::vector<double>& lambdas,
                       const Vector& variances = {});

// Uniform grid of `size` points on [1e-3, 1 - 1e-3].
std::vector<double> lambda_grid(int size);

struct LambdaOptimum {
  double lambda_star = 0.0;
  ErrorCurve curve;
};

// Grid scan, then refinement of the best bracket: bisection on the derivative when
// it changes sign there, golden section to tol otherwise.
LambdaOptimum optimize_lambda(const OperatedWeights& w, double d, int grid_size = 400, double tol = 1e-6,
                              const Vector& variances = {});

std::vector<double> critical_points(const OperatedWeights& w, double d, int grid_size = 400,
                                    const Vector& variances = {});

// "lambda,error,derivative"
void write_curve_csv(std::ostream& os, const ErrorCurve& curve);
// "lambda,collaboration,competition,total"
void write_decomposition_csv(std::ostream& os, const std::vector<double>& lambdas,
                             const std::vector<Decomposition>& rows);

}  // namespace rescomp::analysis
