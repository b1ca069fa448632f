#include "gplab/skorohod.hpp"

#include "gplab/rng.hpp"
#include "gplab/strato.hpp"
#include "gplab/wick.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace gplab;

namespace {

GridPath sample_path(double H, std::size_t d, std::size_t cells, std::uint64_t seed) {
    auto model = std::make_shared<FbmModel>(H, 1.0, d);
    PathSampler sampler(model, Partition::uniform(0.0, 1.0, cells), seed);
    return sampler.sample(0);
}

} // namespace

TEST_CASE("riemann_wick_sum: linear f collapses to the increment") {
    FbmModel model(0.35, 1.0, 2);
    GridPath path = sample_path(0.35, 2, 64, 5);
    TestFunction f = make_test_function("linear", 2);
    WickSumBreakdown b = riemann_wick_sum(f, path, model, 2);
    const double expect = 1.0 * (path.coord(64, 0) - path.coord(0, 0)) +
                          (-0.5) * (path.coord(64, 1) - path.coord(0, 1));
    CHECK(b.total == doctest::Approx(expect).epsilon(1e-12));
    CHECK(b.theta2 == 0.0);
    CHECK(b.theta3_total() == 0.0);
    CHECK(b.theta_tilde == 0.0);
}

TEST_CASE("riemann_wick_sum: classical case H=1/2, f=x^2/2, N=1") {
    FbmModel model(0.5, 1.0, 1);
    GridPath path = sample_path(0.5, 1, 128, 9);
    TestFunction f = make_test_function("quad_half", 1);
    WickSumBreakdown b = riemann_wick_sum(f, path, model, 1);

    double left_sum = 0.0, dr_sum = 0.0;
    for (std::size_t i = 0; i < 128; ++i) {
        left_sum += path.coord(i, 0) * (path.coord(i + 1, 0) - path.coord(i, 0));
        dr_sum += model.variance_increment(path.part[i], path.part[i + 1]);
    }
    CHECK(dr_sum == doctest::Approx(1.0).epsilon(1e-12));
    // theta3 carries -1/2 sum f'' deltaR and the total differs from the left
    // Riemann sum by exactly -(t-s)/2
    CHECK(b.theta3_total() == doctest::Approx(-0.5 * dr_sum).epsilon(1e-12));
    CHECK(b.total + 0.5 * dr_sum == doctest::Approx(left_sum).epsilon(1e-12));
    CHECK(b.total == doctest::Approx(left_sum - 0.5).epsilon(1e-10));
    CHECK(b.theta2 == 0.0);
    CHECK(b.theta_tilde == 0.0);
}

TEST_CASE("riemann_wick_sum: flat model kills the deltaR buckets") {
    FlatModel model(0.0, 1.0, 2);
    Partition part = Partition::uniform(0.0, 1.0, 32);
    GridPath path = GridPath::from_function(part, 2, [](double t, std::span<double> out) {
        out[0] = std::sin(3.0 * t);
        out[1] = t * t - t;
    });
    TestFunction f = make_test_function("poly4", 2);
    WickSumBreakdown b = riemann_wick_sum(f, path, model, 2);
    CHECK(b.theta3_total() == 0.0);
    CHECK(b.theta_tilde == 0.0);
    CHECK(b.total == doctest::Approx(b.theta1 + b.theta2).epsilon(1e-15));
}

TEST_CASE("theta split sums to the total by construction") {
    FbmModel model(0.4, 1.0, 2);
    GridPath path = sample_path(0.4, 2, 64, 21);
    TestFunction f = make_test_function("poly4", 2);
    WickSumBreakdown b = riemann_wick_sum(f, path, model, 2);
    CHECK(b.total ==
          doctest::Approx(b.theta1 + b.theta2 + b.theta3_total() + b.theta_tilde)
              .epsilon(1e-15));
    CHECK(b.theta_tilde != 0.0); // order-2 f has (q,u) = (2e_k, e_k) companions at 2N
}

TEST_CASE("riemann_wick_sum preconditions") {
    FbmModel model(0.5, 1.0, 1);
    GridPath path = sample_path(0.5, 1, 8, 2);
    TestFunction f = make_test_function("quad_half", 1);
    CHECK_THROWS(riemann_wick_sum(f, path, model, 7)); // needs derivatives to 2N = 14
    // growth certificate too large for the model bound: lambda >= 1/(4 d maxR)
    TestFunction bad(1, 12, {TestFunction::Term{1.0, {Univariate::poly({0.0, 1.0})}}}, 1.0,
                     0.3, "bad_lambda");
    CHECK_THROWS_WITH_AS(riemann_wick_sum(bad, path, model, 1),
                         doctest::Contains("growth condition"), std::invalid_argument);
}

TEST_CASE("per-cell Wick terms against the chaos-kernel oracle") {
    // each cell contributes f'(X) wick Y with (X, Y) = (x_{t_i}, dx_i); the
    // breakdown at N=1 must match the oracle's evaluated Wick product cellwise
    FbmModel model(0.3, 1.0, 1);
    GridPath path = sample_path(0.3, 1, 16, 77);
    TestFunction f = make_test_function("cubic", 1); // f' = x^2/2
    const double direct = first_order_wick_sum(f, path, model);
    Polynomial fp(1);
    fp.add_term({2}, 0.5);
    double oracle = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        const double s = path.part[i], t = path.part[i + 1];
        const double var_x = model.variance(s);
        const double var_y = model.variance(t) + model.variance(s) - 2.0 * model.covariance(s, t);
        const double cov = model.covariance(s, t) - model.variance(s);
        const double x = path.coord(i, 0);
        const double y = path.coord(i + 1, 0) - x;
        if (var_x <= 1e-14) {
            // first grid point sits at the origin; Wick product degenerates to
            // the plain product minus the correction with E(XY) = cov
            oracle += fp.evaluate(std::span<const double>(&x, 1)) * y -
                      fp.partial(0).evaluate(std::span<const double>(&x, 1)) * cov;
            continue;
        }
        WickCorrectionReport rep = wick_correction_1d(fp, var_x, var_y, cov, 1, x, y);
        oracle += rep.lhs_value;
    }
    CHECK(direct == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("ito_skorohod_rhs closed forms") {
    SUBCASE("linear f drops the correction") {
        FbmModel model(0.4, 1.0, 2);
        GridPath path = sample_path(0.4, 2, 32, 3);
        TestFunction f = make_test_function("linear", 2);
        const double v = ito_skorohod_rhs(f, path, model, 0.0, 1.0);
        const double expect = (path.coord(32, 0) - path.coord(0, 0)) -
                              0.5 * (path.coord(32, 1) - path.coord(0, 1));
        CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("H = 1/2, f = x^2/2: classical Ito correction") {
        FbmModel model(0.5, 1.0, 1);
        GridPath path = sample_path(0.5, 1, 64, 4);
        TestFunction f = make_test_function("quad_half", 1);
        const double v = ito_skorohod_rhs(f, path, model, 0.0, 1.0);
        const double xt = path.coord(64, 0);
        CHECK(v == doctest::Approx(xt * xt / 2.0 - 0.5).epsilon(1e-12));
        // also from an interior grid point
        const double s = path.part[16];
        const double xs = path.coord(16, 0);
        CHECK(ito_skorohod_rhs(f, path, model, s, 1.0) ==
              doctest::Approx(xt * xt / 2.0 - xs * xs / 2.0 - 0.5 * (1.0 - s)).epsilon(1e-12));
    }
    SUBCASE("f = |x|^2/2, general H, s = 0: exact antiderivative of R'") {
        for (double H : {0.3, 0.7}) {
            FbmModel model(H, 1.0, 2);
            GridPath path = sample_path(H, 2, 32, 5);
            TestFunction f = make_test_function("quad_half", 2);
            const double v = ito_skorohod_rhs(f, path, model, 0.0, 1.0);
            std::span<const double> xt(path.at(32), 2);
            CHECK(v == doctest::Approx(f(xt) - 1.0).epsilon(1e-12)); // (d/2) t^{2H} = 1
        }
    }
    SUBCASE("s and t must be grid points") {
        FbmModel model(0.5, 1.0, 1);
        GridPath path = sample_path(0.5, 1, 8, 6);
        TestFunction f = make_test_function("quad_half", 1);
        CHECK_THROWS(ito_skorohod_rhs(f, path, model, 0.1234, 1.0));
    }
}

TEST_CASE("degenerate reduction: Wick residual equals the Stratonovich residual") {
    auto model = std::make_shared<FlatModel>(0.0, 1.0, 2);
    Partition part = Partition::uniform(0.0, 1.0, 64);
    GridPath path = GridPath::from_function(part, 2, [](double t, std::span<double> out) {
        out[0] = t * t;
        out[1] = std::cos(t) - 1.0;
    });
    TestFunction f = make_test_function("poly3", 2);
    WickSumBreakdown b = riemann_wick_sum(f, path, *model, 2);
    const double rhs = ito_skorohod_rhs(f, path, *model, 0.0, 1.0);
    RoughLift lift = lift_piecewise_linear(path, 1, PairMode::Adjacent);
    const double strato = strato_sum(f, path, lift, 2, StratoVariant::Powers);
    std::span<const double> x0(path.at(0), 2), xT(path.at(64), 2);
    CHECK(rhs == doctest::Approx(f(xT) - f(x0)).epsilon(1e-13));
    CHECK(std::abs(b.total - rhs) == doctest::Approx(std::abs(strato - (f(xT) - f(x0))))
                                          .epsilon(1e-12));
}

TEST_CASE("quadratic f: order-2 Wick sum equals the Skorohod side at every mesh") {
    // Taylor terminates at order 2 and the deltaR terms telescope, so the
    // order-2 Wick sum is not merely convergent but exact per path
    for (double H : {0.4, 0.5}) {
        auto model = std::make_shared<FbmModel>(H, 1.0, 2);
        Partition fine = Partition::uniform(0.0, 1.0, 256);
        PathSampler sampler(model, fine, 1002);
        TestFunction f = make_test_function("quad_half", 2);
        SkorohodConvergence conv = skorohod_convergence(f, sampler, 64, 4, 2, 4);
        for (const auto& row : conv.rows)
            CHECK(row.abs_err <= 1e-12);
    }
}

TEST_CASE("skorohod convergence: order-1 Wick sums at H = 1/2 have rate near 1/2") {
    auto model = std::make_shared<FbmModel>(0.5, 1.0, 1);
    Partition fine = Partition::uniform(0.0, 1.0, 256);
    PathSampler sampler(model, fine, 1001);
    TestFunction f = make_test_function("quad_half", 1);
    const int levels = 5;
    const std::size_t n_samples = 2000;
    std::vector<std::vector<double>> errs(levels + 1, std::vector<double>(n_samples));
    parallel_for(n_samples, 4, [&](std::size_t p) {
        const GridPath path = sampler.sample(p);
        const double rhs = ito_skorohod_rhs(f, path, *model, 0.0, 1.0);
        for (int k = 0; k <= levels; ++k) {
            const GridPath coarse = path.restrict_stride(std::size_t{1} << (levels - k));
            errs[static_cast<std::size_t>(k)][p] =
                std::abs(first_order_wick_sum(f, coarse, *model) - rhs);
        }
    });
    std::vector<double> med(levels + 1), mesh(levels + 1);
    for (int k = 0; k <= levels; ++k) {
        auto& e = errs[static_cast<std::size_t>(k)];
        std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(n_samples / 2),
                         e.end());
        med[static_cast<std::size_t>(k)] = e[n_samples / 2];
        mesh[static_cast<std::size_t>(k)] = 1.0 / static_cast<double>(8u << k);
        if (k > 0)
            CHECK(med[static_cast<std::size_t>(k)] < med[static_cast<std::size_t>(k - 1)]);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k <= levels; ++k) {
        const double lx = std::log(mesh[static_cast<std::size_t>(k)]);
        const double ly = std::log(med[static_cast<std::size_t>(k)]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = levels + 1.0;
    const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(order >= 0.3);
    CHECK(order <= 0.7);
}

TEST_CASE("skorohod convergence: H = 0.4, d = 2, N = 2 medians decrease") {
    auto model = std::make_shared<FbmModel>(0.4, 1.0, 2);
    Partition fine = Partition::uniform(0.0, 1.0, 256);
    PathSampler sampler(model, fine, 1002);
    TestFunction f = make_test_function("sin1_sq2", 2); // nonpolynomial Laplacian
    SkorohodConvergence conv = skorohod_convergence(f, sampler, 1000, 4, 2, 4);
    for (std::size_t k = 1; k < conv.median_abs_err.size(); ++k)
        CHECK(conv.median_abs_err[k] < conv.median_abs_err[k - 1]);
}

TEST_CASE("duality: n = 0 zero-mean") {
    auto model = std::make_shared<FbmModel>(0.5, 1.0, 1);
    Partition part = Partition::uniform(0.0, 1.0, 128);
    PathSampler sampler(model, part, 2001);
    TestFunction f = make_test_function("quad_half", 1);
    std::vector<BumpFunction> phi{BumpFunction(0.5, 0.25, 1.0)};
    DualityReport rep = duality_check(f, phi, 0, sampler, 20000, 0.0, 1.0, 4);
    CHECK(rep.rhs == 0.0);
    CHECK(std::abs(rep.z) <= 3.0);
}

TEST_CASE("duality: n = 1 with linear f against the Gaussian-moment oracle") {
    auto model = std::make_shared<FbmModel>(0.5, 1.0, 1);
    Partition part = Partition::uniform(0.0, 1.0, 128);
    PathSampler sampler(model, part, 2002);
    TestFunction f = make_test_function("linear", 1);
    std::vector<BumpFunction> phi{BumpFunction(0.5, 0.25, 1.0)};
    DualityReport rep = duality_check(f, phi, 1, sampler, 20000, 0.0, 1.0, 4);
    CHECK(std::abs(rep.z) <= 3.0);
    // closed form: E[x(phi) (x_1 - x_0)] with f = <e_1, x>
    const double oracle = bump_increment_cross_moment(*model, phi[0], 0.0, 1.0);
    CHECK(std::abs(rep.lhs - oracle) <= 3.0 * rep.lhs_se);
    CHECK(rep.rhs == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("duality: zero bump reports degenerate") {
    auto model = std::make_shared<FbmModel>(0.5, 1.0, 1);
    Partition part = Partition::uniform(0.0, 1.0, 32);
    PathSampler sampler(model, part, 2003);
    TestFunction f = make_test_function("quad_half", 1);
    std::vector<BumpFunction> phi{BumpFunction(0.5, 0.25, 1.0, 0.0)};
    DualityReport rep = duality_check(f, phi, 1, sampler, 100, 0.0, 1.0);
    CHECK(rep.degenerate);
}

TEST_CASE("weighted sum diagnostics") {
    auto model = std::make_shared<FbmModel>(0.5, 1.0, 1);
    Partition fine = Partition::uniform(0.0, 1.0, 256);
    PathSampler sampler(model, fine, 3001);
    TestFunction g = make_test_function("quad_half", 1);
    TestFunction f = make_test_function("cubic", 1);
    WeightedSumDiagnostics diag = weighted_sum_diagnostics(g, f, sampler, 4000, 4, 4);

    for (const auto& lev : diag.levels) {
        // E[V^(2)(1)] = 0 by stationarity of the compensated squares
        CHECK(std::abs(lev.z_v2_one) <= 3.0);
        // H = 1/2: Var(V^(2)(1)) = 2 sum dt^2 = 2 / cells, and the Isserlis
        // oracle reproduces it to roundoff
        CHECK(lev.isserlis_var_v2_one ==
              doctest::Approx(2.0 / static_cast<double>(lev.cells)).epsilon(1e-10));
        // empirical variance within MC slack of the oracle
        CHECK(lev.var_v2_one ==
              doctest::Approx(lev.isserlis_var_v2_one).epsilon(0.2));
        // the order-1 Wick split is an exact algebraic identity per path
        CHECK(lev.max_split_residual <= 1e-10);
    }
}

TEST_CASE("weighted sums: variance scaling is level-stable for H = 0.4") {
    auto model = std::make_shared<FbmModel>(0.4, 1.0, 1);
    Partition fine = Partition::uniform(0.0, 1.0, 512);
    PathSampler sampler(model, fine, 3002);
    TestFunction g = make_test_function("quad_half", 1);
    TestFunction f = make_test_function("cubic", 1);
    WeightedSumDiagnostics diag = weighted_sum_diagnostics(g, f, sampler, 3000, 4, 4);
    // scaled variances should agree across the last few levels within MC noise
    const auto& lv = diag.levels;
    for (std::size_t k = 1; k < lv.size(); ++k) {
        const double ratio = lv[k].var_v2_one_scaled / lv[k - 1].var_v2_one_scaled;
        CHECK(ratio > 0.5);
        CHECK(ratio < 2.0);
    }
    // and the Isserlis oracle matches the empirical variance at every level
    for (const auto& lev : lv)
        CHECK(lev.var_v2_one == doctest::Approx(lev.isserlis_var_v2_one).epsilon(0.25));
}
