#include <doctest.h>

#include <cmath>

#include "bp/bridges.hpp"
#include "bp/rng.hpp"

using namespace bp;

TEST_CASE("naive state endpoints are exact") {
  Tensor z({2}, {0.7, 0.2});
  Tensor eps({2}, {-1.3, 0.5});
  CHECK(naive_state(z, 0.0, eps) == z);
  CHECK(naive_state(z, 1.0, eps) == eps);
  CHECK_THROWS(naive_state(z, 1.5, eps));
  CHECK_THROWS(naive_state(z, -0.1, eps));
}

TEST_CASE("naive state interior mixture") {
  Tensor z({2}, {1.0, 0.0});
  Tensor eps({2}, {0.0, 1.0});
  Tensor s = naive_state(z, 0.25, eps);
  CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("ddbm sigma formula and reparameterization identity") {
  CHECK(ddbm_sigma(0.0) == 0.0);
  CHECK(ddbm_sigma(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ddbm_sigma(3.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK((1.0 - ddbm_sigma(1.0)) * 1.0 == doctest::Approx(ddbm_sigma(1.0)).epsilon(1e-15));
  CHECK((1.0 - ddbm_sigma(3.0)) * 3.0 == doctest::Approx(ddbm_sigma(3.0)).epsilon(1e-15));
  CHECK_THROWS(ddbm_sigma(-0.5));

  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(0.0, 10.0);
    const double sigma = ddbm_sigma(s);
    CHECK(std::abs((1.0 - sigma) * s - sigma) < 1e-12);
  }
}

TEST_CASE("ddbm schedule hits the stated endpoints") {
  DdbmSchedule sched;
  CHECK(sched.a(0.0) == 0.0);
  CHECK(sched.b(0.0) == 1.0);
  CHECK(sched.s(0.0) == 0.0);
  CHECK(sched.a(1.0) == 1.0);
  CHECK(sched.b(1.0) == 0.0);
  CHECK(sched.s(1.0) == 0.0);
}

TEST_CASE("ddbm state pins both endpoints noiselessly") {
  Tensor zc({2}, {0.9, 0.1});
  Tensor zd({2}, {0.2, 0.8});
  Tensor eps({2}, {3.0, -3.0});
  DdbmSchedule sched;
  DdbmState at0 = ddbm_state(zc, zd, 0.0, eps, sched);
  CHECK(at0.y == zc);
  CHECK(at0.sigma == 0.0);
  DdbmState at1 = ddbm_state(zc, zd, 1.0, eps, sched);
  CHECK(at1.y == zd);
  CHECK(at1.sigma == 0.0);
}

TEST_CASE("ddbm state midpoint matches the scalar evaluation") {
  // a=0.5, b=0.5, s=0.5, sigma=1/3; with eps=0: y = (2/3)*[0.5,0.5]
  Tensor zc({2}, {1.0, 0.0});
  Tensor zd({2}, {0.0, 1.0});
  Tensor eps({2});
  DdbmSchedule sched;
  DdbmState st = ddbm_state(zc, zd, 0.5, eps, sched);
  CHECK(st.sigma == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(st.y[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(st.y[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("ebr state endpoints") {
  Tensor zc({2}, {0.9, 0.3});
  Tensor zd({2}, {0.1, 0.7});
  Tensor eps({2}, {2.0, -2.0});
  EbrSchedule sched;  // T0 = 0.4
  CHECK(ebr_state(zc, zd, 0.0, eps, sched) == zc);
  Tensor zero({2});
  Tensor at_t0 = ebr_state(zc, zd, 0.4, zero, sched);
  Tensor expect = scale(zd, 1.0 - 0.4);
  CHECK(at_t0 == expect);
  CHECK_THROWS(ebr_state(zc, zd, 0.41, eps, sched));
}

TEST_CASE("ebr state interior value from the scalar oracle") {
  Tensor zc({2}, {1.0, 0.0});
  Tensor zd({2}, {0.0, 1.0});
  Tensor eps({2}, {1.0, 1.0});
  EbrSchedule sched;
  Tensor s = ebr_state(zc, zd, 0.2, eps, sched);
  CHECK(s[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("ebr schedule validates T0 and lambda is linear") {
  EbrSchedule bad;
  bad.t0 = 0.0;
  CHECK_THROWS(bad.validate());
  bad.t0 = 1.2;
  CHECK_THROWS(bad.validate());
  EbrSchedule ok;
  ok.t0 = 0.5;
  CHECK(ok.lambda(0.0) == 0.0);
  CHECK(ok.lambda(0.5) == 1.0);
  CHECK(ok.lambda(0.25) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("noise-shape contrast on a dense grid") {
  // EBR noise coefficient (= t) strictly increases; DDBM s_t vanishes at
  // the ends and is positive inside
  DdbmSchedule sched;
  const int n = 1000;
  double prev_ebr = -1.0;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double ebr_noise = 0.4 * t;  // t in [0, T0]
    CHECK(ebr_noise > prev_ebr);
    prev_ebr = ebr_noise;
    const double s = sched.s(t);
    if (i == 0 || i == n)
      CHECK(s == 0.0);
    else
      CHECK(s > 0.0);
  }
}

TEST_CASE("every construction is (1-sigma)*signal + sigma*eps with the fed sigma") {
  Rng rng(5);
  Tensor zc = rng.uniform_tensor({8}, 0.0, 1.0);
  Tensor zd = rng.uniform_tensor({8}, 0.0, 1.0);
  Tensor eps = rng.normal_tensor({8});
  const double t = 0.3;

  Tensor nv = naive_state(zd, t, eps);
  for (std::size_t i = 0; i < nv.size(); ++i)
    CHECK(nv[i] == doctest::Approx((1 - t) * zd[i] + t * eps[i]).epsilon(1e-12));

  DdbmSchedule dsched;
  DdbmState ds = ddbm_state(zc, zd, t, eps, dsched);
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    const double signal = dsched.a(t) * zd[i] + dsched.b(t) * zc[i];
    CHECK(ds.y[i] == doctest::Approx((1 - ds.sigma) * signal + ds.sigma * eps[i]).epsilon(1e-12));
  }

  EbrSchedule esched;
  Tensor es = ebr_state(zc, zd, t, eps, esched);
  for (std::size_t i = 0; i < es.size(); ++i) {
    const double lam = t / esched.t0;
    const double signal = (1 - lam) * zc[i] + lam * zd[i];
    CHECK(es[i] == doctest::Approx((1 - t) * signal + t * eps[i]).epsilon(1e-12));
  }
}
