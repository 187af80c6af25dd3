#pragma once

namespace mgst {

// Standard normal density, CDF and quantile. The quantile is a rational
// approximation polished with Newton steps; accurate to full double
// precision for p in (1e-300, 1 - 1e-16).
double norm_pdf(double x);
double norm_cdf(double x);
double norm_quantile(double p);

}  // namespace mgst
