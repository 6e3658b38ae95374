#include <doctest.h>

#include <cmath>

#include "longmix/stats.hpp"

using namespace longmix;

// Reference values computed independently with scipy.stats (1.11).

TEST_CASE("normal quantile and cdf") {
    CHECK(stats::norm_quantile(0.25) == doctest::Approx(-0.6744897501960817).epsilon(1e-12));
    CHECK(stats::norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(stats::norm_quantile(1e-9) == doctest::Approx(-5.9978070150076865).epsilon(1e-10));
    CHECK(stats::norm_cdf(0.0) == doctest::Approx(0.5));
    for (double p : {1e-8, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        CHECK(stats::norm_cdf(stats::norm_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
    }
}

TEST_CASE("student t quantiles match reference values") {
    CHECK(stats::t_quantile(0.975, 28) == doctest::Approx(2.048407141795244).epsilon(1e-10));
    CHECK(stats::t_quantile(0.975, 339) == doctest::Approx(1.9669864608402778).epsilon(1e-10));
    CHECK(stats::t_quantile(0.975, 1) == doctest::Approx(12.706204736432095).epsilon(1e-9));
    CHECK(stats::t_quantile(0.975, 2) == doctest::Approx(4.302652729696142).epsilon(1e-10));
    CHECK(stats::t_quantile(0.5, 10) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("student t cdf and two-sided tails") {
    CHECK(stats::t_cdf(1.5, 7) == doctest::Approx(0.911350756505015).epsilon(1e-12));
    CHECK(stats::t_two_sided_p(4.067 / 0.832, 28) ==
          doctest::Approx(3.7648070496012845e-05).epsilon(1e-8));
    CHECK(stats::t_two_sided_p(5.805 / 0.820, 28) ==
          doctest::Approx(1.0591329949281816e-07).epsilon(1e-8));
    for (double df : {1.0, 2.0, 5.0, 28.0, 339.0}) {
        for (double p : {0.6, 0.9, 0.975, 0.999}) {
            CHECK(stats::t_cdf(stats::t_quantile(p, df), df) ==
                  doctest::Approx(p).epsilon(1e-10));
        }
    }
}

TEST_CASE("chi-square upper tail") {
    CHECK(stats::chisq_upper_tail(0.216, 1) == doctest::Approx(0.6421047669142776).epsilon(1e-10));
    CHECK(stats::chisq_upper_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(stats::chisq_upper_tail(10.0, 3) ==
          doctest::Approx(0.01856613546304325).epsilon(1e-10));
    // Extreme statistics stay representable instead of flushing to zero.
    const double tiny = stats::chisq_upper_tail(584.966, 1);
    CHECK(tiny == doctest::Approx(3.1180460034848437e-129).epsilon(1e-7));
    CHECK(tiny > 0.0);
    CHECK(stats::chisq_upper_tail(0.0, 4) == 1.0);
}

TEST_CASE("sample moments") {
    CHECK(stats::mean({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
    CHECK(stats::sample_sd({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
    CHECK(stats::sample_sd({5.0}) == 0.0);
}
