#ifndef LONGMIX_STATS_HPP
#define LONGMIX_STATS_HPP

#include <vector>

namespace longmix::stats {

// Standard normal density, distribution function and quantile.
double norm_pdf(double x);
double norm_cdf(double x);
// Inverse of norm_cdf on (0, 1); rational approximation refined by one
// Halley step, accurate to full double precision away from the endpoints.
double norm_quantile(double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double ibeta(double a, double b, double x);

// Regularized upper incomplete gamma Q(a, x); underflows gracefully for
// large x so extreme chi-square tails stay representable.
double gammq(double a, double x);

// Student t distribution with df > 0 degrees of freedom.
double t_pdf(double t, double df);
double t_cdf(double t, double df);
// Two-sided tail probability P(|T| >= |t|).
double t_two_sided_p(double t, double df);
// Quantile: t_cdf(t_quantile(p, df), df) == p.
double t_quantile(double p, double df);

// Chi-square upper tail P(X >= x) with df degrees of freedom.
double chisq_upper_tail(double x, double df);

// Sample moments (sd uses the n-1 divisor; returns 0 for n < 2).
double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

}  // namespace longmix::stats

#endif  // LONGMIX_STATS_HPP
