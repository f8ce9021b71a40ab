#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ellsrc/inversion.hpp"

using namespace ellsrc;

namespace {

struct Setup {
  Mesh state;
  SourceGrid grid;
  AssembledOperators ops;
  ForwardOperator op;
  SpectralDecomposition decomp;
  Weights weights;
};

Setup make_setup(const DomainSpec& source_domain, double epsilon = 1.0) {
  Setup s;
  s.state = build_structured_mesh(source_domain.refined(2));
  s.grid = coarsen_to_source_grid(s.state, 2);
  s.ops = assemble(s.state, s.grid);
  s.op = build_forward_matrix(s.state, s.ops, s.grid, epsilon);
  s.decomp = decompose(s.op);
  s.weights = weight_operator(s.decomp);
  return s;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& gen) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = double(gen() >> 11) * 0x1.0p-53 - 0.5;
  return v;
}

BoundaryData zero_data(const ForwardOperator& op) {
  return {Eigen::VectorXd::Zero(op.n_boundary()), "zero"};
}

}  // namespace

TEST_CASE("weighted Tikhonov recovery peaks at the generating cell", "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  const int n = s.op.n_sources();
  for (int j : {0, 18, 27, 45, 63}) {
    const BoundaryData d = apply_forward(s.op, Eigen::VectorXd::Unit(n, j));
    const SourceEstimate est = method_I(s.op, s.weights, d, 1e-12);
    int argmax = -1;
    est.coefficients.maxCoeff(&argmax);
    CHECK(argmax == j);
  }
}

TEST_CASE("zero data gives zero estimates for every method", "[inversion]") {
  const Setup s = make_setup(square_domain(4));
  const BoundaryData d = zero_data(s.op);
  CHECK(method_I(s.op, s.weights, d, 1e-6).coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(method_II(s.op, s.weights, d, 1e-6).coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(method_III(s.op, s.weights, d, 1e-6).coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha must be positive", "[inversion]") {
  const Setup s = make_setup(square_domain(2));
  const BoundaryData d = zero_data(s.op);
  CHECK_THROWS_AS(method_I(s.op, s.weights, d, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(method_II(s.op, s.weights, d, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(method_III(s.op, s.weights, d, 0.0), std::invalid_argument);
}

TEST_CASE("huge alpha shrinks the estimate at rate 1/alpha", "[inversion]") {
  const Setup s = make_setup(square_domain(4));
  const BoundaryData d = apply_forward(s.op, Eigen::VectorXd::Ones(s.op.n_sources()));
  const double n6 = method_I(s.op, s.weights, d, 1e6).coefficients.norm();
  const double n8 = method_I(s.op, s.weights, d, 1e8).coefficients.norm();
  CHECK(n6 / n8 == Catch::Approx(100.0).epsilon(0.01));
  CHECK(n8 < 1e-5);
}

TEST_CASE("scaled reweighted recovery is at least as accurate as the plain one", "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  const int n = s.op.n_sources();
  for (int j = 0; j < n; ++j) {
    const auto rows = compare_methods_on_basis(s.op, s.weights, j, {1e-12});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].scaled_II <= rows[0].method_I + 1e-8);
  }
}

TEST_CASE("with a trivial nullspace the reweighted method reduces to the plain one",
          "[inversion]") {
  const Setup s = make_setup(square_domain(2));  // full rank, weights == 1
  REQUIRE((s.weights.w.array() - 1.0).abs().maxCoeff() < 1e-10);
  std::mt19937_64 gen(9);
  BoundaryData d;
  d.values = random_vector(s.op.n_boundary(), gen);
  const SourceEstimate one = method_I(s.op, s.weights, d, 1e-6);
  const SourceEstimate two = method_II(s.op, s.weights, d, 1e-6);
  CHECK((one.coefficients - two.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("the weighted minimizer is the inverse-weighted reweighted one", "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  std::mt19937_64 gen(10);
  const double alpha = 1e-3;  // keeps both routes far from the conditioning floor
  for (int trial = 0; trial < 5; ++trial) {
    BoundaryData d;
    d.values = random_vector(s.op.n_boundary(), gen);
    const SourceEstimate two = method_II(s.op, s.weights, d, alpha);
    const SourceEstimate three = method_III(s.op, s.weights, d, alpha);
    CHECK((three.coefficients - two.coefficients.cwiseQuotient(s.weights.w)).cwiseAbs().maxCoeff() <
          1e-12);

    // direct route: (K'K + alpha W^2) z = K'd
    const Eigen::MatrixXd kt = s.op.K_weighted;
    Eigen::MatrixXd normal = kt.transpose() * kt;
    normal += alpha * s.weights.w.cwiseProduct(s.weights.w).asDiagonal().toDenseMatrix();
    const Eigen::VectorXd direct = normal.ldlt().solve(kt.transpose() * s.op.to_weighted(d.values));
    CHECK((three.coefficients - direct).norm() <= 1e-10 * direct.norm());
  }
}

TEST_CASE("every method satisfies its normal equations", "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  std::mt19937_64 gen(12);
  BoundaryData d;
  d.values = random_vector(s.op.n_boundary(), gen);
  const double alpha = 1e-6;
  const Eigen::MatrixXd kt = s.op.K_weighted;
  const Eigen::VectorXd dt = s.op.to_weighted(d.values);

  const Eigen::VectorXd x = s.weights.apply(method_I(s.op, s.weights, d, alpha).coefficients);
  const Eigen::VectorXd rhs1 = kt.transpose() * dt;
  CHECK((kt.transpose() * (kt * x) + alpha * x - rhs1).norm() <= 1e-10 * rhs1.norm());

  const Eigen::MatrixXd kw = kt * s.weights.w.cwiseInverse().asDiagonal();
  const Eigen::VectorXd y = method_II(s.op, s.weights, d, alpha).coefficients;
  const Eigen::VectorXd rhs2 = kw.transpose() * dt;
  CHECK((kw.transpose() * (kw * y) + alpha * y - rhs2).norm() <= 1e-10 * rhs2.norm());

  const Eigen::VectorXd z = method_III(s.op, s.weights, d, alpha).coefficients;
  CHECK((kt.transpose() * (kt * z) + alpha * s.weights.w.cwiseProduct(s.weights.w).cwiseProduct(z) -
         rhs1)
            .norm() <= 1e-10 * rhs1.norm());
}

TEST_CASE("estimates report the true residual and the field scaling", "[inversion]") {
  const Setup s = make_setup(square_domain(4));
  std::mt19937_64 gen(13);
  BoundaryData d;
  d.values = random_vector(s.op.n_boundary(), gen);
  const SourceEstimate est = method_III(s.op, s.weights, d, 1e-4);
  CHECK(est.residual ==
        Catch::Approx(s.op.ynorm(s.op.K * est.coefficients - d.values)).margin(1e-14));
  CHECK((est.field - est.coefficients / std::sqrt(s.grid.cell_area)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("vanishing alpha drives plain Tikhonov to the minimum-norm solution", "[inversion]") {
  // full-rank configuration, in-range data: the limit is numerically clean
  const Setup s = make_setup(square_domain(2));
  std::mt19937_64 gen(14);
  const BoundaryData d = apply_forward(s.op, random_vector(s.op.n_sources(), gen));
  const Eigen::VectorXd target = min_norm_solution(s.decomp, d);
  std::vector<double> dist;
  for (double alpha : {1e-6, 1e-9, 1e-12}) {
    const Eigen::VectorXd x = s.weights.apply(method_I(s.op, s.weights, d, alpha).coefficients);
    dist.push_back((x - target).norm() / target.norm());
  }
  CHECK(dist[0] > dist[1]);
  CHECK(dist[1] > dist[2]);
  CHECK(dist[2] <= 1e-6);
}

TEST_CASE("plain Tikhonov is additive over source images at fixed alpha", "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  const int n = s.op.n_sources();
  std::mt19937_64 gen(15);
  const double alpha = 1e-4;  // the discrepancy floor scales like eps * sigma1^2 / alpha
  for (int trial = 0; trial < 5; ++trial) {
    const int j1 = int(gen() % std::uint64_t(n)), j2 = int(gen() % std::uint64_t(n));
    const BoundaryData d1 = apply_forward(s.op, Eigen::VectorXd::Unit(n, j1));
    const BoundaryData d2 = apply_forward(s.op, Eigen::VectorXd::Unit(n, j2));
    BoundaryData both;
    both.values = d1.values + d2.values;
    const Eigen::VectorXd sum = method_I(s.op, s.weights, d1, alpha).coefficients +
                                method_I(s.op, s.weights, d2, alpha).coefficients;
    const Eigen::VectorXd combined = method_I(s.op, s.weights, both, alpha).coefficients;
    CHECK((combined - sum).norm() <= 1e-10 * sum.norm());
  }
}

TEST_CASE("method comparison table is finite, positive, and stable across decades",
          "[inversion]") {
  const Setup s = make_setup(square_domain(8));
  const std::vector<double> alphas{1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12};
  const auto rows = compare_methods_on_basis(s.op, s.weights, 27, alphas);
  REQUIRE(rows.size() == alphas.size());
  REQUIRE(s.decomp.rank < s.op.n_sources());  // nontrivial nullspace here
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(std::isfinite(rows[k].method_I));
    CHECK(std::isfinite(rows[k].scaled_II));
    CHECK(std::isfinite(rows[k].method_III));
    CHECK(rows[k].method_I > 0.0);
    CHECK(rows[k].scaled_II > 0.0);
    CHECK(rows[k].method_III > 0.0);
    if (k > 0) {
      CHECK(rows[k].method_I / rows[k - 1].method_I < 100.0);
      CHECK(rows[k - 1].method_I / rows[k].method_I < 100.0);
    }
  }
  CHECK_THROWS_AS(compare_methods_on_basis(s.op, s.weights, -1, alphas), std::invalid_argument);
}
