#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "rescomp/analysis.hpp"
#include "rescomp/control.hpp"
#include "rescomp/error.hpp"

using namespace rescomp;
using namespace rescomp::control;
using graphkit::apply_malicious;
using graphkit::uniform_weights;

namespace {

OperatedWeights c4_mal4() {
  const int mal[] = {4};
  return apply_malicious(uniform_weights(graphkit::cycle_graph(4)), mal);
}

}  // namespace

TEST_CASE("K = 1 on C4") {
  const auto rep = gramian(c4_mal4(), 0.1, 4, 1);
  CHECK(std::abs(rep.controllability_index - 0.405) <= 1e-12);
  CHECK(rep.horizon == 1);
  CHECK(rep.node == 4);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = expect(0, 2) = expect(2, 0) = expect(2, 2) = 0.81 * 0.25;
  CHECK((rep.gramian - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("lambda 1 gives a zero Gramian") {
  const auto rep = gramian(c4_mal4(), 1.0, 4);
  CHECK(rep.gramian.isZero(0.0));
  CHECK(rep.controllability_index == 0.0);
  CHECK(rep.horizon == 3);
}

TEST_CASE("Gramian against explicit matrix powers") {
  const auto w = uniform_weights(graphkit::gen_regular(20, 3, 5));
  const int mal[] = {13};
  const auto op = apply_malicious(w, mal);
  for (double lambda : {0.05, 0.3, 0.8})
    for (int k : {1, 5, 19, 40}) {
      const auto rep = gramian(op, lambda, 13, k);
      const Matrix g = oracle::gramian(op.w11(), op.w12().col(0), lambda, k);
      CHECK((rep.gramian - g).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(std::abs(controllability_index(op, lambda, 13, k) - rep.gramian.trace()) <= 1e-10);
      CHECK((rep.gramian - rep.gramian.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(rep.gramian);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    }
}

TEST_CASE("trace monotone in K and decreasing in lambda") {
  for (int s = 0; s < 5; ++s) {
    const auto w = uniform_weights(graphkit::gen_regular(24, 3 + s % 3, 40 + s));
    const int mal[] = {1 + 3 * s};
    const auto op = apply_malicious(w, mal);
    double prev = -1.0;
    for (int k = 1; k <= 30; ++k) {
      const double t = controllability_index(op, 0.2, mal[0], k);
      CHECK(t >= prev);
      prev = t;
    }
    double last = 1e300;
    for (int k = 1; k <= 9; ++k) {
      const double t = controllability_index(op, 0.1 * k, mal[0]);
      CHECK(t < last);
      last = t;
    }
  }
}

TEST_CASE("collaboration norm") {
  const auto op = c4_mal4();
  CHECK(collaboration_norm(op, 1.0, 4) == 0.0);
  double prev = 1e300;
  for (double lambda : analysis::lambda_grid(100)) {
    const double c = collaboration_norm(op, lambda, 4);
    CHECK(c < prev);
    prev = c;
    for (double d : {0.0, 10.0}) CHECK((1.0 + d) * c == analysis::decompose_error(op, lambda, d).collaboration);
  }
  const Matrix l = oracle::steady(uniform_weights(graphkit::cycle_graph(4)).entries(), {4}, 0.5);
  CHECK(std::abs(collaboration_norm(op, 0.5, 4) - l.block(0, 3, 3, 1).squaredNorm()) <= 1e-14);
}

TEST_CASE("regular node is rejected") {
  const auto op = c4_mal4();
  try {
    gramian(op, 0.5, 2);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPrecondition);
  }
  CHECK_THROWS_AS(controllability_index(op, 0.5, 1), Error);
  CHECK_THROWS_AS(collaboration_norm(op, 0.5, 3), Error);
}

TEST_CASE("Gramian export") {
  const auto rep = gramian(c4_mal4(), 0.1, 4, 2);
  std::stringstream js;
  write_gramian_json(js, rep);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("lambda") == 0.1);
  CHECK(j.at("K") == 2);
  CHECK(j.at("trace").get<double>() == rep.controllability_index);
  std::stringstream cs;
  write_gramian_csv(cs, rep);
  int rows = 0;
  for (std::string line; std::getline(cs, line);) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
  }
  CHECK(rows == 3);
}
