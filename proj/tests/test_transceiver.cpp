#include <doctest.h>

#include <cmath>
#include <random>

#include "isea/errors.hpp"
#include "isea/oracle.hpp"
#include "isea/transceiver.hpp"
#include "isea/validation.hpp"

using namespace isea;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void check_feasible(const FdmInstance& inst, const TransceiverDesign& design) {
  const Vector power = device_power(design, inst.moments);
  for (std::size_t k = 0; k < power.size(); ++k) {
    CHECK(power[k] <= inst.budgets[k] * (1.0 + kPowerSlack));
  }
}

TdmInstance three_devices() {
  TdmInstance t;
  t.gains = {1.0, 0.6, 0.3};
  t.budgets = {1.0, 1.0, 1.0};
  t.moments = {1.0, 1.0, 1.0};
  t.est_vars = {1.0, 1.0, 1.0};
  t.noise_var = 0.1;
  t.delta = 1.0;
  return t;
}

}  // namespace

TEST_CASE("solver names") {
  CHECK(parse_solver("fdm_md") == SolverKind::kFdmMd);
  CHECK(solver_name(SolverKind::kChannelInversion) == "channel_inversion");
  CHECK_THROWS_AS(parse_solver("ellipsoid"), ValidationError);
  CHECK(parse_dual_update("subgradient") == DualUpdate::kSubgradient);
}

TEST_CASE("instance validation") {
  TdmInstance t = three_devices();
  CHECK_NOTHROW(validate(t));
  t.budgets[1] = 0.0;
  CHECK_THROWS_AS(validate(t), ValidationError);
  FdmInstance f = random_instance(2, 2, 10.0, false, 1);
  f.noise_var = 0.0;
  CHECK_THROWS_AS(validate(f), ValidationError);
  f = random_instance(2, 2, 10.0, false, 1);
  f.delta[0] = -1.0;
  CHECK_THROWS_AS(validate(f), ValidationError);
}

TEST_CASE("TDM computation-optimal design") {
  SUBCASE("single device uses full power") {
    TdmInstance t;
    t.gains = {0.8};
    t.budgets = {2.0};
    t.moments = {1.5};
    t.est_vars = {0.4};
    t.noise_var = 0.1;
    const auto r = tdm_mse_optimal(t);
    const double b = std::sqrt(2.0 / 1.5);
    CHECK(r.design.tx(0, 0) == doctest::Approx(b).epsilon(1e-12));
    const double a = 0.8 * 0.4 * b / (0.64 * 0.4 * b * b + 0.1);
    CHECK(r.design.rx[0] == doctest::Approx(a).epsilon(1e-12));
  }
  SUBCASE("noiseless alignment reaches zero") {
    TdmInstance t = three_devices();
    t.noise_var = 0.0;
    CHECK(tdm_mse_optimal(t).objective <= 1e-12);
  }
  SUBCASE("three devices match the oracle") {
    const TdmInstance t = three_devices();
    const auto r = tdm_mse_optimal(t);
    const auto o = brute_force_oracle(as_fdm(t), OracleObjective::kMse);
    CHECK(rel(r.objective, o.objective) <= 1e-3);
    CHECK(r.kkt_residual <= 1e-6);
    check_feasible(as_fdm(t), r.design);
  }
  SUBCASE("full-power devices have the weaker links") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const TdmInstance t = random_tdm_instance(3, 10.0, 500 + s);
      const auto r = tdm_mse_optimal(t);
      double weakest_inverting = INFINITY;
      double strongest_full = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double full = std::sqrt(t.budgets[k] / t.moments[k]);
        const double u = t.gains[k] * full;
        if (r.design.tx(k, 0) >= full * (1.0 - 1e-9)) {
          strongest_full = std::max(strongest_full, u);
        } else {
          weakest_inverting = std::min(weakest_inverting, u);
        }
      }
      CHECK(strongest_full <= weakest_inverting * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("TDM decision-optimal design") {
  SUBCASE("single device uses full power") {
    TdmInstance t;
    t.gains = {0.5};
    t.budgets = {1.0};
    t.moments = {2.0};
    t.est_vars = {0.3};
    t.noise_var = 0.1;
    t.delta = 2.0;
    CHECK(tdm_md_optimal(t).design.tx(0, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  }
  SUBCASE("equal links all use full power") {
    TdmInstance t = three_devices();
    t.gains = {0.7, 0.7, 0.7};
    const auto r = tdm_md_optimal(t);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r.design.tx(k, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // One-dimensional brute force over a common amplitude.
    double best = 0.0;
    for (int i = 1; i <= 10000; ++i) {
      const double c = 0.7 * i / 10000.0;
      best = std::max(best, 9.0 * c * c / (3.0 * c * c + 0.1));
    }
    CHECK(r.objective >= best * (1.0 - 1e-9));
  }
  SUBCASE("heterogeneous variances are rejected") {
    TdmInstance t = three_devices();
    t.est_vars[2] = 2.0;
    CHECK_THROWS_AS(tdm_md_optimal(t), UnsupportedInstance);
  }
  SUBCASE("agrees with the oracle and the MSE design") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TdmInstance t = random_tdm_instance(3, 5.0, 900 + s);
      const FdmInstance f = as_fdm(t);
      const auto md = tdm_md_optimal(t);
      const auto mse = tdm_mse_optimal(t);
      CHECK(rel(md.objective, brute_force_oracle(f, OracleObjective::kMd).objective) <= 1e-3);
      CHECK(rel(total_md(f, md.design), total_md(f, mse.design)) <= 1e-6);
      CHECK(rel(total_mse(f, md.design), total_mse(f, mse.design)) <= 1e-6);
    }
  }
}

TEST_CASE("FDM computation-optimal design") {
  const DualOptions tight = tight_dual_options();
  SUBCASE("one subcarrier matches the TDM solution") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TdmInstance t = random_tdm_instance(3, 8.0, 40 + s);
      const auto f = fdm_mse_dual(as_fdm(t), tight);
      CHECK(f.converged);
      CHECK(rel(f.objective, tdm_mse_optimal(t).objective) <= 1e-4);
    }
  }
  SUBCASE("flat channel splits power evenly") {
    FdmInstance f = random_instance(2, 3, 10.0, true, 7);
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t n = 0; n < 3; ++n) {
        f.gains(k, n) = f.gains(k, 0);
        f.moments(k, n) = 1.0;
        f.est_vars(k, n) = 0.2;
      }
    }
    const auto r = fdm_mse_dual(f, tight);
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t n = 1; n < 3; ++n) {
        CHECK(std::abs(r.design.tx(k, n) * r.design.tx(k, n) - r.design.tx(k, 0) * r.design.tx(k, 0)) <= 1e-6);
      }
    }
  }
  SUBCASE("random instances against the oracle") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const FdmInstance f = random_instance(2, 2, 12.0, false, 60 + s);
      const auto r = fdm_mse_dual(f, tight);
      CHECK(r.converged);
      CHECK(r.kkt_residual <= 1e-6);
      CHECK(rel(r.objective, brute_force_oracle(f, OracleObjective::kMse).objective) <= 1e-3);
      check_feasible(f, r.design);
    }
  }
  SUBCASE("subgradient updates stop at the iteration cap") {
    DualOptions slow;
    slow.update = DualUpdate::kSubgradient;
    slow.max_iters = 3;
    slow.eps_lambda = 1e-14;
    slow.eps_power = 1e-14;
    const auto r = fdm_mse_dual(random_instance(3, 4, 10.0, false, 2), slow);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    check_feasible(random_instance(3, 4, 10.0, false, 2), r.design);
  }
}

TEST_CASE("FDM decision-optimal design") {
  const DualOptions tight = tight_dual_options();
  SUBCASE("one subcarrier matches the TDM solution") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TdmInstance t = random_tdm_instance(3, 8.0, 70 + s);
      CHECK(rel(fdm_md_optimal(as_fdm(t), tight).objective, tdm_md_optimal(t).objective) <= 1e-4);
    }
  }
  SUBCASE("single device against the oracle") {
    const FdmInstance f = random_instance(1, 2, 6.0, false, 33);
    const auto r = fdm_md_optimal(f, tight);
    CHECK(rel(r.objective, brute_force_oracle(f, OracleObjective::kMd).objective) <= 1e-3);
    const Vector power = device_power(r.design, f.moments);
    CHECK(power[0] == doctest::Approx(f.budgets[0]).epsilon(1e-9));
  }
  SUBCASE("uniform prior on a flat channel splits power evenly") {
    FdmInstance f = random_instance(3, 2, 10.0, true, 8);
    for (std::size_t k = 0; k < 3; ++k) {
      f.gains(k, 1) = f.gains(k, 0);
      f.moments(k, 1) = f.moments(k, 0);
      f.est_vars(k, 1) = f.est_vars(k, 0);
    }
    f.delta = {1.3, 1.3};
    const auto r = fdm_md_optimal(f, tight);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(r.design.tx(k, 0) * r.design.tx(k, 0) - r.design.tx(k, 1) * r.design.tx(k, 1)) <= 1e-6);
    }
  }
  SUBCASE("zero discriminative prior gets no power") {
    FdmInstance f = random_instance(2, 2, 10.0, false, 9);
    f.delta[1] = 0.0;
    const auto r = fdm_md_optimal(f, tight);
    CHECK(r.design.tx(0, 1) == 0.0);
    CHECK(r.design.tx(1, 1) == 0.0);
    check_feasible(f, r.design);
  }
}

TEST_CASE("baselines") {
  const FdmInstance f = random_instance(3, 4, 10.0, false, 12);
  SUBCASE("equal allocation spends the whole budget") {
    const auto d = baseline_equal(f);
    const Vector power = device_power(d, f.moments);
    for (std::size_t k = 0; k < 3; ++k) CHECK(power[k] == doctest::Approx(f.budgets[k]).epsilon(1e-12));
    const FdmInstance single = random_instance(2, 1, 10.0, false, 13);
    const auto s = baseline_equal(single);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(s.tx(k, 0) == doctest::Approx(std::sqrt(single.budgets[k] / single.moments(k, 0))));
    }
  }
  SUBCASE("channel inversion branches") {
    FdmInstance strong = f;
    FdmInstance weak = f;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t n = 0; n < 4; ++n) {
        strong.gains(k, n) = 1e3;
        weak.gains(k, n) = 1e-3;
      }
    }
    const auto ds = baseline_channel_inversion(strong);
    const auto dw = baseline_channel_inversion(weak);
    const auto eq = baseline_equal(weak);
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t n = 0; n < 4; ++n) {
        CHECK(ds.tx(k, n) == doctest::Approx(1e-3));
        CHECK(dw.tx(k, n) == eq.tx(k, n));
      }
    }
    check_feasible(f, baseline_channel_inversion(f));
  }
  SUBCASE("optimized MSE never loses to equal allocation") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const FdmInstance g = random_instance(3, 4, 10.0, false, 200 + s);
      const auto r = fdm_mse_dual(g, tight_dual_options());
      CHECK(total_mse(g, r.design) <= total_mse(g, baseline_equal(g)) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("receive coefficient minimizes the MSE") {
  const FdmInstance f = random_instance(3, 2, 10.0, false, 77);
  const auto d = baseline_equal(f);
  const double best = total_mse(f, d);
  for (const double factor : {0.9, 0.99, 1.01, 1.1}) {
    TransceiverDesign moved = d;
    for (double& a : moved.rx) a *= factor;
    CHECK(total_mse(f, moved) > best);
  }
}

TEST_CASE("oracle") {
  SUBCASE("single variable closed form") {
    TdmInstance t;
    t.gains = {1.0};
    t.budgets = {1.0};
    t.moments = {1.0};
    t.est_vars = {1.0};
    t.noise_var = 0.5;
    // Full power is optimal: MSE = 1 - 1 / (1 + 0.5).
    const auto o = brute_force_oracle(as_fdm(t), OracleObjective::kMse);
    CHECK(o.objective == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }
  SUBCASE("deterministic") {
    const FdmInstance f = random_instance(2, 2, 5.0, false, 4);
    const auto a = brute_force_oracle(f, OracleObjective::kMd);
    const auto b = brute_force_oracle(f, OracleObjective::kMd);
    CHECK(a.objective == b.objective);
    CHECK(a.design.tx.data() == b.design.tx.data());
  }
  SUBCASE("too many coefficients") {
    CHECK_THROWS_AS(brute_force_oracle(random_instance(3, 3, 5.0, false, 4), OracleObjective::kMse),
                    ValidationError);
  }
}

TEST_CASE("solver dispatch") {
  const FdmInstance f = random_instance(3, 2, 10.0, false, 31);
  for (const auto* name : {"fdm_mse", "fdm_md", "equal", "channel_inversion"}) {
    const auto r = solve(parse_solver(name), f, Scheme::kFdm);
    CHECK(r.converged);
    check_feasible(f, r.design);
  }
  // TDM kinds solve each slot against the full budget.
  FdmInstance slots = random_instance(3, 1, 10.0, true, 32);
  const auto tdm = solve(SolverKind::kTdmMse, slots, Scheme::kTdm);
  CHECK(tdm.design.scheme == Scheme::kTdm);
  CHECK(device_power(tdm.design, slots.moments)[0] <= slots.budgets[0] * (1.0 + kPowerSlack));
  const std::string json = to_json(tdm);
  CHECK(json.find("\"objective\"") != std::string::npos);
}

TEST_CASE("solver validation suite") {
  ValidationOptions options;
  options.instances = 20;
  for (const auto& r : validate_solvers(options)) {
    INFO(r.name << " worst " << r.worst);
    CHECK(r.passed());
  }
}
