#include <doctest.h>

#include <cmath>
#include <random>

#include "dingo/dingo.hpp"
#include "oracles.hpp"

using namespace dingo;
using oracles::Matrix;

namespace {

Shard full_shard(std::size_t n) {
  Shard s;
  s.indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.indices[i] = i;
  return s;
}

/// Regression dataset whose rows are an explicit design matrix.
Dataset design_regression(const Matrix& a, const Vector& targets) {
  Dataset data;
  data.n = static_cast<std::size_t>(a.rows());
  data.p = static_cast<std::size_t>(a.cols());
  data.features.resize(data.n * data.p);
  for (std::size_t i = 0; i < data.n; ++i)
    for (std::size_t j = 0; j < data.p; ++j)
      data.features[i * data.p + j] = a(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j));
  data.targets = targets;
  return data;
}

Dataset identity_regression(std::size_t d) {
  return design_regression(Matrix::Identity(static_cast<Eigen::Index>(d),
                                            static_cast<Eigen::Index>(d)),
                           Vector(d, 0.0));
}

/// Dense local Hessian of a least-squares shard (sum convention).
Matrix shard_hessian(const Dataset& data, const Shard& shard) {
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(data.p),
                          static_cast<Eigen::Index>(data.p));
  for (std::size_t j : shard.indices) {
    const auto row = data.row(j);
    const Eigen::Map<const Eigen::VectorXd> x(row.data(),
                                              static_cast<Eigen::Index>(data.p));
    h += x * x.transpose();
  }
  return h;
}

DingoConfig exact_config() {
  DingoConfig cfg;
  cfg.exact_solves = true;
  return cfg;
}

}  // namespace

TEST_SUITE("dingo") {

TEST_CASE("gradient round on a single-worker quadratic") {
  const Dataset data = identity_regression(2);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(2)});
  const GradientRound grad = gradient_round(env, Vector{1, 2});
  CHECK(grad.g == Vector{1, 2});
  CHECK(grad.f == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(env.ledger().rounds == 2);
}

TEST_CASE("gradient round equals the unsharded oracle") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::softmax_xent;
  spec.n = 48;
  spec.p = 5;
  spec.num_classes = 4;
  const Dataset data = gen_synthetic(spec, 3);
  const Objective obj{ObjectiveKind::softmax_xent, 1e-6};
  ClusterEnv env(data, obj, partition(data.n, 4, 9));
  std::mt19937_64 rng(11);
  const Vector w = oracles::random_vector(env.dim(), rng);
  const Vector g = gradient_round(env, w).g;
  const Vector whole = local_gradient(obj, data, full_shard(data.n), w);
  Vector diff = g;
  axpy(-1.0, whole, diff);
  CHECK(norm(diff) <= 1e-12 * norm(whole));
}

TEST_CASE("run stops immediately below the gradient tolerance") {
  const Dataset data = identity_regression(3);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(3)});
  DingoConfig cfg;
  cfg.grad_tol = 1e-9;
  const DingoResult result = dingo_run(env, cfg, Vector(3, 0.0));
  CHECK(result.status == RunStatus::converged);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].case_taken == StepCase::converged);
  CHECK(env.ledger().rounds == 2);  // just the initial gradient
}

TEST_CASE("case vectors on the identity Hessian have closed forms") {
  const Dataset data = identity_regression(4);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(4)});
  DingoConfig cfg = exact_config();
  cfg.phi = 0.5;
  const Vector w{1, -2, 0.5, 3};
  const Vector g = gradient_round(env, w).g;  // = w
  const CaseVectors cv = case_vectors_round(env, w, g, cfg);

  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(cv.hg[i] == doctest::Approx(g[i]).epsilon(1e-12));
    CHECK(cv.v1bar[i] == doctest::Approx(g[i]).epsilon(1e-10));
    CHECK(cv.v2bar[i] == doctest::Approx(g[i] / 1.25).epsilon(1e-10));
  }
  CHECK(env.ledger().rounds == 4);
}

TEST_CASE("hessian-gradient product matches a dense oracle") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::softmax_xent;
  spec.n = 40;
  spec.p = 5;
  spec.num_classes = 3;  // d = 10
  const Dataset data = gen_synthetic(spec, 17);
  const Objective obj{ObjectiveKind::softmax_xent, 1e-5};
  const auto shards = partition(data.n, 2, 3);
  ClusterEnv env(data, obj, shards);
  std::mt19937_64 rng(23);
  const Vector w = oracles::random_vector(env.dim(), rng);
  const Vector g = gradient_round(env, w).g;
  const CaseVectors cv = case_vectors_round(env, w, g, exact_config());

  // dense mean Hessian from per-shard Hessian-vector products on basis vectors
  const std::size_t d = env.dim();
  Matrix hbar = Matrix::Zero(d, d);
  for (const Shard& s : shards) {
    Vector e(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      e[j] = 1.0;
      const Vector col = local_hvp(obj, data, s, w, e);
      for (std::size_t i = 0; i < d; ++i)
        hbar(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            col[i] / 2.0;
      e[j] = 0.0;
    }
  }
  const oracles::EVector want = hbar * oracles::to_eigen(g);
  for (std::size_t i = 0; i < d; ++i)
    CHECK(cv.hg[i] == doctest::Approx(want(static_cast<Eigen::Index>(i)))
                          .epsilon(1e-10));
}

TEST_CASE("exact mean minimum-norm directions match the SVD oracle") {
  std::mt19937_64 rng(29);
  const Matrix a = oracles::random_gaussian(6, 6, rng);
  const Dataset data = design_regression(a, oracles::random_vector(6, rng));
  const Objective obj{ObjectiveKind::least_squares, 0.0};
  // three rows per shard: local Hessians are rank-3, genuinely singular
  std::vector<Shard> shards(2);
  shards[0].indices = {0, 1, 2};
  shards[1].indices = {3, 4, 5};
  ClusterEnv env(data, obj, shards);
  const Vector w = oracles::random_vector(6, rng);
  const Vector g = gradient_round(env, w).g;
  const CaseVectors cv = case_vectors_round(env, w, g, exact_config());

  Vector want(6, 0.0);
  for (const Shard& s : shards)
    axpy(0.5, oracles::pinv_solve(shard_hessian(data, s), g), want);
  Vector diff = cv.v1bar;
  axpy(-1.0, want, diff);
  CHECK(norm(diff) <= 1e-6 * norm(want));
}

TEST_CASE("select_case ordering and thresholds") {
  const Vector g{2, 0};
  const Vector hg{2, 0};  // |g|^2 = 4
  SUBCASE("case 1 wins when its test passes") {
    const auto sel = select_case(hg, g, Vector{0.1, 0}, g, 0.5);
    CHECK(sel.which == StepCase::case1);
    CHECK(sel.inner == doctest::Approx(4.0).epsilon(0));
  }
  SUBCASE("case 2 only after case 1 fails") {
    const auto sel = select_case(hg, Vector{-2, 0}, Vector{1.5, 0}, g, 0.5);
    CHECK(sel.which == StepCase::case2);
    CHECK(sel.inner == doctest::Approx(3.0).epsilon(0));
  }
  SUBCASE("case 3 when both fail") {
    const auto sel = select_case(hg, Vector{-2, 0}, Vector{0.1, 0}, g, 0.5);
    CHECK(sel.which == StepCase::case3);
  }
  SUBCASE("vanishing Hessian-gradient product is fatal") {
    CHECK_THROWS_AS(select_case(Vector{0, 0}, g, g, g, 0.5), DiagnosticError);
  }
}

TEST_CASE("tiny curvature forces case 3 with a full active set") {
  // rows sqrt(c) e_k twice over: every local Hessian is exactly c*I
  const double c = 1e-4;
  const std::size_t p = 3;
  Matrix a = Matrix::Zero(2 * p, p);
  for (std::size_t k = 0; k < p; ++k) {
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = std::sqrt(c);
    a(static_cast<Eigen::Index>(p + k), static_cast<Eigen::Index>(k)) =
        std::sqrt(c);
  }
  const Dataset data = design_regression(a, Vector(2 * p, 0.0));
  std::vector<Shard> shards(2);
  shards[0].indices = {0, 1, 2};
  shards[1].indices = {3, 4, 5};
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0}, shards);

  DingoConfig cfg = exact_config();
  cfg.theta = 100.0;
  cfg.phi = 1e-2;
  cfg.max_iters = 1;
  // theta*phi = 1 while |Hg|/|g| = c: the partial-membership bound can only
  // hold because no worker passes the damped test
  const DingoResult result = dingo_run(env, cfg, Vector{1, 2, 3});
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].case_taken == StepCase::case3);
  CHECK(result.trace[0].active_set_size == 2);
  CHECK(result.trace[0].partial_active_set_bound_ok);
}

TEST_CASE("case3_lambda closed forms") {
  const Vector hg{2, 0};
  const Vector v3{1, 0};  // <v3, hg> = 2
  CHECK(case3_lambda(Vector{0, 0}, v3, hg, 4.0, 1.0) ==
        doctest::Approx(2.0).epsilon(0));

  // boundary: numerator eps -> lambda -> 0+
  const double eps = 1e-12;
  const Vector v2{(1.0 * 4.0 - eps) / 2.0, 0};  // <v2,hg> = theta|g|^2 - eps
  const double lambda = case3_lambda(v2, v3, hg, 4.0, 1.0);
  CHECK(lambda > 0.0);
  CHECK(lambda == doctest::Approx(eps / 2.0).epsilon(1e-3));

  CHECK_THROWS_AS(case3_lambda(Vector{0, 0}, Vector{-1, 0}, hg, 4.0, 1.0),
                  InvariantError);
}

TEST_CASE("case-3 worker direction equals the dense KKT oracle") {
  std::mt19937_64 rng(31);
  const double phi = 1e-2;
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 8;
    const Matrix h = oracles::random_symmetric(d, rng);
    const Vector g = oracles::random_vector(d, rng);
    const Vector hg = oracles::random_vector(d, rng);
    const double gns = norm_sq(g);

    const oracles::DenseMap hmap(h);
    const SolveReport r2 = damped_lsq_solve(hmap, phi, g, 200, 1e-14);
    const StackedMap stacked(hmap, phi);
    const GramMap normal(stacked);
    const SolveReport r3 = cg_solve(normal, hg, 200, 1e-14);

    // pick theta so this worker is strictly inside the active set
    const double theta = (dot(r2.solution, hg) + 1.0 + std::abs(dot(r2.solution, hg))) / gns;
    const double lambda = case3_lambda(r2.solution, r3.solution, hg, gns, theta);
    Vector p = scaled(-1.0, r2.solution);
    axpy(-lambda, r3.solution, p);

    const auto kkt = oracles::constrained_lsq(h, phi, g, hg, theta);
    CHECK(kkt.lambda > 0.0);
    CHECK(lambda == doctest::Approx(kkt.lambda).epsilon(1e-8));
    Vector diff = p;
    axpy(-1.0, kkt.p, diff);
    CHECK(norm(diff) <= 1e-8 * (norm(kkt.p) + 1.0));
    // active constraint
    CHECK(dot(p, hg) ==
          doctest::Approx(-theta * gns).epsilon(1e-10));
  }
}

TEST_CASE("case3_round splits membership and assembles the mean direction") {
  // two heterogeneous ill-conditioned shards; search deterministic seeds for
  // a configuration where exactly one worker passes the damped test
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    std::mt19937_64 rng(seed);
    const int p = 4;
    Matrix a = oracles::random_gaussian(8, p, rng);
    for (int r = 4; r < 8; ++r) a.row(r) *= 0.02;  // second shard nearly flat
    const Dataset data = design_regression(a, oracles::random_vector(8, rng));
    std::vector<Shard> shards(2);
    shards[0].indices = {0, 1, 2, 3};
    shards[1].indices = {4, 5, 6, 7};
    ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0}, shards);

    DingoConfig cfg = exact_config();
    cfg.phi = 1e-2;
    const Vector w = oracles::random_vector(p, rng);
    const Vector g = gradient_round(env, w).g;
    if (norm(g) == 0.0) continue;
    const CaseVectors cv = case_vectors_round(env, w, g, cfg);
    const double gns = norm_sq(g);

    // per-worker damped directions from a dense oracle
    Vector inner2(2);
    std::vector<Vector> v2(2);
    for (int i = 0; i < 2; ++i) {
      const Matrix h = shard_hessian(data, shards[i]);
      const Matrix lhs = h * h + cfg.phi * cfg.phi * Matrix::Identity(p, p);
      v2[i] = oracles::dense_solve(
          lhs, oracles::to_std(h * oracles::to_eigen(g)));
      inner2[i] = dot(v2[i], cv.hg);
    }
    const double lo = std::min(inner2[0], inner2[1]);
    const double hi = std::max(inner2[0], inner2[1]);
    if (!(hi > lo + 1e-9 * std::abs(hi))) continue;
    const double theta = hi * 0.999 / gns;
    if (!(theta > 0.0)) continue;
    if (!(lo < theta * gns)) continue;
    if (!(dot(cv.v2bar, cv.hg) < theta * gns)) continue;   // case 2 must fail
    if (!(dot(cv.v1bar, cv.hg) < theta * gns)) continue;   // case 1 must fail

    DingoConfig run_cfg = cfg;
    run_cfg.theta = theta;
    const auto sel = select_case(cv.hg, cv.v1bar, cv.v2bar, g, theta);
    REQUIRE(sel.which == StepCase::case3);
    const Case3Result c3 = case3_round(env, cv.hg, gns, run_cfg);
    CHECK(c3.active_set_size == 1);
    CHECK(c3.partial_active_set_bound_ok);
    CHECK(dot(c3.p, cv.hg) <= -theta * gns * (1.0 - 1e-12));

    // assembled from the passing worker's damped direction and the failing
    // worker's constrained direction
    const int outside = inner2[0] >= theta * gns ? 0 : 1;
    const int inside = 1 - outside;
    const Matrix h_in = shard_hessian(data, shards[inside]);
    const auto kkt = oracles::constrained_lsq(h_in, cfg.phi, g, cv.hg, theta);
    Vector expect = scaled(-0.5, v2[outside]);
    axpy(0.5, kkt.p, expect);
    Vector diff = c3.p;
    axpy(-1.0, expect, diff);
    CHECK(norm(diff) <= 1e-6 * (norm(expect) + 1.0));
    return;  // one verified configuration is enough
  }
  FAIL("no seed produced a split active set");
}

TEST_CASE("case3_round with an empty active set is a logic error") {
  const Dataset data = identity_regression(3);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(3)});
  DingoConfig cfg = exact_config();
  cfg.theta = 1e-8;  // everything passes the damped test
  const Vector w{1, 1, 1};
  const Vector g = gradient_round(env, w).g;
  const CaseVectors cv = case_vectors_round(env, w, g, cfg);
  CHECK_THROWS_AS(case3_round(env, cv.hg, norm_sq(g), cfg), std::logic_error);
}

TEST_CASE("line search takes the full step on a quadratic with p = -g") {
  const Dataset data = identity_regression(2);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(2)});
  DingoConfig cfg = exact_config();
  const Vector w{3, 4};
  const Vector g = gradient_round(env, w).g;
  case_vectors_round(env, w, g, cfg);  // primes worker caches
  const Vector p = scaled(-1.0, g);
  const double gns = norm_sq(g);
  const LineSearchResult ls = line_search(env, w, p, -gns, gns, cfg);
  CHECK(ls.alpha == 1.0);
  CHECK(norm(ls.g_next) <= 1e-14);
  CHECK(ls.f_next <= 1e-14);
}

TEST_CASE("line search rejects directions without a descent certificate") {
  const Dataset data = identity_regression(2);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(2)});
  DingoConfig cfg = exact_config();
  const Vector w{3, 4};
  const Vector g = gradient_round(env, w).g;
  case_vectors_round(env, w, g, cfg);
  const double gns = norm_sq(g);
  CHECK_THROWS_AS(line_search(env, w, g, dot(g, g), gns, cfg), DiagnosticError);
}

TEST_CASE("line search exhaustion on an inconsistent certificate is loud") {
  const Dataset data = identity_regression(2);
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(2)});
  DingoConfig cfg = exact_config();
  const Vector w{3, 4};
  const Vector g = gradient_round(env, w).g;
  case_vectors_round(env, w, g, cfg);
  const double gns = norm_sq(g);
  // claim a descent certificate while handing over an ascent direction
  CHECK_THROWS_AS(line_search(env, w, g, -gns, gns, cfg), DiagnosticError);
}

TEST_CASE("single worker Newton converges in one step under exact solves") {
  std::mt19937_64 rng(37);
  const int d = 10;
  const Matrix a =
      oracles::random_gaussian(d, d, rng) + 3.0 * Matrix::Identity(d, d);
  const Dataset data = design_regression(a, oracles::random_vector(d, rng));
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                 {full_shard(d)});
  DingoConfig cfg = exact_config();
  cfg.grad_tol = 0.0;
  cfg.max_iters = 1;
  const Vector w0 = oracles::random_vector(d, rng);
  const Vector g0 = local_gradient(Objective{ObjectiveKind::least_squares, 0.0},
                                   data, full_shard(d), w0);
  const DingoResult result = dingo_run(env, cfg, w0);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].case_taken == StepCase::case1);
  CHECK(result.trace[0].alpha == 1.0);
  CHECK(norm(result.g_final) <= 1e-10 * norm(g0));
}

TEST_CASE("identical strongly convex shards stay in case 1") {
  std::mt19937_64 rng(41);
  const int d = 6;
  const Matrix a =
      oracles::random_gaussian(d, d, rng) + 2.5 * Matrix::Identity(d, d);
  const Dataset data = design_regression(a, oracles::random_vector(d, rng));
  std::vector<Shard> shards(4, full_shard(d));  // every worker sees everything
  ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0}, shards);
  DingoConfig cfg;
  cfg.theta = 0.5;
  cfg.max_iters = 5;
  cfg.grad_tol = 0.0;
  const DingoResult result = dingo_run(env, cfg, oracles::random_vector(d, rng));
  REQUIRE(result.trace.size() == 5);
  for (const auto& it : result.trace) CHECK(it.case_taken == StepCase::case1);
}

TEST_CASE("strict gradient-norm decrease along the trace") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::softmax_xent;
  spec.n = 120;
  spec.p = 6;
  spec.num_classes = 3;
  const Dataset data = gen_synthetic(spec, 53);
  ClusterEnv env(data, Objective{ObjectiveKind::softmax_xent, 1e-6},
                 partition(data.n, 3, 7));
  DingoConfig cfg;
  cfg.max_iters = 8;
  cfg.grad_tol = 0.0;
  const DingoResult result = dingo_run(env, cfg, Vector(env.dim(), 0.0));
  REQUIRE(result.trace.size() >= 2);
  for (std::size_t i = 0; i + 1 < result.trace.size(); ++i) {
    const auto& cur = result.trace[i];
    const auto& next = result.trace[i + 1];
    const double bound =
        (1.0 - 2.0 * cur.alpha * cfg.rho * cfg.theta) * cur.grad_norm *
        cur.grad_norm;
    CHECK(next.grad_norm * next.grad_norm <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("per-iteration round budget") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::softmax_xent;
  spec.n = 80;
  spec.p = 4;
  spec.num_classes = 3;
  const Dataset data = gen_synthetic(spec, 59);
  ClusterEnv env(data, Objective{ObjectiveKind::softmax_xent, 1e-6},
                 partition(data.n, 4, 11));
  DingoConfig cfg;
  cfg.max_iters = 5;
  cfg.grad_tol = 0.0;
  const DingoResult result = dingo_run(env, cfg, Vector(env.dim(), 0.0));
  for (const auto& it : result.trace) {
    CHECK(it.rounds_used <= 8);
    if (it.case_taken != StepCase::case3) CHECK(it.rounds_used <= 6);
  }
}

TEST_CASE("runs are bit-reproducible") {
  SyntheticSpec spec;
  spec.kind = ObjectiveKind::softmax_xent;
  spec.n = 60;
  spec.p = 4;
  spec.num_classes = 3;
  const Dataset data = gen_synthetic(spec, 61);
  DingoConfig cfg;
  cfg.max_iters = 4;
  cfg.grad_tol = 0.0;

  const auto run_once = [&]() {
    ClusterEnv env(data, Objective{ObjectiveKind::softmax_xent, 1e-6},
                   partition(data.n, 3, 13));
    return dingo_run(env, cfg, Vector(env.dim(), 0.0));
  };
  const DingoResult a = run_once();
  const DingoResult b = run_once();
  CHECK(a.w_final == b.w_final);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].grad_norm == b.trace[i].grad_norm);
    CHECK(a.trace[i].f == b.trace[i].f);
  }
}

TEST_CASE("inexactness certificates") {
  SUBCASE("exact solves give certificates at roundoff level") {
    const Dataset data = identity_regression(3);
    ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0},
                   {full_shard(3)});
    DingoConfig cfg = exact_config();
    const Vector w{1, 2, -1};
    const Vector g = gradient_round(env, w).g;
    const CaseVectors cv = case_vectors_round(env, w, g, cfg);
    IterateState it;
    it.workers = cv.workers;
    const auto certs = check_inexactness(it, cfg);
    REQUIRE(certs.size() == 1);
    CHECK(certs[0].eps1 <= 1e-12);
    CHECK(certs[0].eps2 <= 1e-12);
    CHECK_FALSE(certs[0].flagged);
  }
  SUBCASE("the zero vector is flagged") {
    IterateState it;
    WorkerCert cert;
    cert.eps1 = 1.0;  // the do-nothing approximation
    cert.eps2 = 0.2;
    it.workers = {cert};
    const auto certs = check_inexactness(it, DingoConfig{});
    CHECK(certs[0].flagged);
  }
  SUBCASE("cap-limited solves record interior certificates") {
    std::mt19937_64 rng(67);
    oracles::EVector spec(40);
    for (int i = 0; i < 40; ++i)
      spec(i) = std::pow(10.0, -3.0 * i / 39.0);  // condition 1e3
    const Matrix h = oracles::symmetric_with_spectrum(spec, rng);
    const oracles::DenseMap hmap(h);
    const StackedMap stacked(hmap, 1e-6);
    const GramMap normal(stacked);
    const Vector b = oracles::random_vector(40, rng);
    const SolveReport rep = cg_solve(normal, b, 5, 0.0);
    CHECK(rep.relative_residual > 0.0);
    CHECK(rep.relative_residual < 1.0);
  }
  SUBCASE("advisory case-3 bound uses the supplied constant") {
    DingoConfig cfg;
    cfg.phi = 1.0;
    IterateState it;
    WorkerCert cert;
    cert.eps3 = 0.5;
    it.workers = {cert};
    // bound = sqrt(1/(k^2+1)); k = 1 -> 0.707 (pass), k = 3 -> 0.316 (fail)
    CHECK(check_inexactness(it, cfg, 1.0)[0].eps3_within_bound);
    CHECK_FALSE(check_inexactness(it, cfg, 3.0)[0].eps3_within_bound);
  }
}

TEST_CASE("descent certificate holds across forced case-3 instances") {
  std::mt19937_64 rng(71);
  int verified = 0;
  for (int trial = 0; trial < 200 && verified < 100; ++trial) {
    const int p = 5;
    const Matrix a = oracles::random_gaussian(10, p, rng);
    const Dataset data = design_regression(a, oracles::random_vector(10, rng));
    std::vector<Shard> shards(2);
    shards[0].indices = {0, 1, 2, 3, 4};
    shards[1].indices = {5, 6, 7, 8, 9};
    ClusterEnv env(data, Objective{ObjectiveKind::least_squares, 0.0}, shards);
    DingoConfig cfg = exact_config();
    cfg.phi = 1e-3;

    const Vector w = oracles::random_vector(p, rng);
    const Vector g = gradient_round(env, w).g;
    if (norm(g) == 0.0) continue;
    const CaseVectors cv = case_vectors_round(env, w, g, cfg);
    const double gns = norm_sq(g);
    // force case 3 by putting theta above both candidate inner products
    const double top = std::max(dot(cv.v1bar, cv.hg), dot(cv.v2bar, cv.hg));
    cfg.theta = (std::abs(top) + 1.0) * 2.0 / gns;
    const auto sel = select_case(cv.hg, cv.v1bar, cv.v2bar, g, cfg.theta);
    REQUIRE(sel.which == StepCase::case3);
    const Case3Result c3 = case3_round(env, cv.hg, gns, cfg);
    CHECK(dot(c3.p, cv.hg) <= -cfg.theta * gns * (1.0 - 1e-12));
    for (const auto& wc : c3.workers)
      if (wc.in_active_set) CHECK(wc.lambda > 0.0);
    ++verified;
  }
  CHECK(verified == 100);
}

}  // TEST_SUITE
