#pragma once

namespace rescav::normal {

inline constexpr double kPi = 3.14159265358979323846;

double pdf(double x);
double cdf(double x);
// Inverse standard normal CDF. Acklam's rational approximation (rel. error ~1e-9)
// followed by one Halley step against erfc, giving close to full double precision.
double quantile(double p);

}  // namespace rescav::normal
