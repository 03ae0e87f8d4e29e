#pragma once

#include <string>

#include "vemrb/vem.hpp"

namespace vemrb {

struct ProblemParams {
  double nu = 80.0;    // test1 frequency in y
  double nu1 = 80.0;   // test2
  double nu2 = 30.0;   // test2
  Mat2 K = Mat2::Identity();  // custom
};

inline const Mat2 kTensorK1 = (Mat2() << 1.0, 0.0, 0.0, 6.25e-4).finished();
inline const Mat2 kTensorK2 = (Mat2() << 1.0, 1e-2, 5e-3, 1e-4).finished();

/// Presets: poisson, test1, test2, patch, line, jump, custom.
DiffusionProblem make_problem(const std::string& name, const ProblemParams& params = {});

/// Linear u = a + b x + c y, f = 0, g = u.
DiffusionProblem linear_problem(double a, double b, double c, const Mat2& K = Mat2::Identity());

}  // namespace vemrb
