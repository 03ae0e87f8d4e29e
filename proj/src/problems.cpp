#include "vemrb/problems.hpp"

#include <cmath>
#include <numbers>

#include "vemrb/error.hpp"

namespace vemrb {

namespace {

constexpr double kPi = std::numbers::pi;

// Value, gradient and Hessian entries of a manufactured solution.
struct Jet {
  double u, ux, uy, uxx, uxy, uyy;
};

DiffusionProblem from_jet(std::string name, const Mat2& K, std::function<Jet(const Point&)> jet) {
  DiffusionProblem p;
  p.name = std::move(name);
  p.K = K;
  const double k11 = K(0, 0), k12 = K(0, 1), k21 = K(1, 0), k22 = K(1, 1);
  p.f = [=](const Point& x) {
    const Jet j = jet(x);
    return -(k11 * j.uxx + (k12 + k21) * j.uxy + k22 * j.uyy);
  };
  p.g = [=](const Point& x) { return jet(x).u; };
  ExactFunction e;
  e.value = [=](const Point& x) { return jet(x).u; };
  e.gradient = [=](const Point& x) {
    const Jet j = jet(x);
    return Point(j.ux, j.uy);
  };
  p.exact = e;
  return p;
}

Jet sine_product(const Point& x, double a, double b, double scale) {
  const double sx = std::sin(a * x.x()), cx = std::cos(a * x.x());
  const double sy = std::sin(b * x.y()), cy = std::cos(b * x.y());
  return {scale * sx * sy,           scale * a * cx * sy,     scale * b * sx * cy,
          -scale * a * a * sx * sy, scale * a * b * cx * cy, -scale * b * b * sx * sy};
}

}  // namespace

DiffusionProblem linear_problem(double a, double b, double c, const Mat2& K) {
  return from_jet("linear", K, [=](const Point& x) {
    return Jet{a + b * x.x() + c * x.y(), b, c, 0.0, 0.0, 0.0};
  });
}

DiffusionProblem make_problem(const std::string& name, const ProblemParams& prm) {
  if (name == "poisson") {
    return from_jet(name, Mat2::Identity(),
                    [](const Point& x) { return sine_product(x, 4 * kPi, 4 * kPi, 1.0 / (32 * kPi * kPi)); });
  }
  if (name == "custom") {
    return from_jet(name, prm.K,
                    [](const Point& x) { return sine_product(x, 4 * kPi, 4 * kPi, 1.0 / (32 * kPi * kPi)); });
  }
  if (name == "test1") {
    const double nu = prm.nu;
    return from_jet(name, kTensorK1, [nu](const Point& x) { return sine_product(x, 2 * kPi, nu * kPi, 1.0); });
  }
  if (name == "test2") {
    const double n1 = prm.nu1, n2 = prm.nu2;
    return from_jet(name, kTensorK2, [n1, n2](const Point& x) {
      const double px = x.x(), py = x.y();
      if (px <= 0.5) {
        const double s2 = std::sin(2 * kPi * px), c2 = std::cos(2 * kPi * px);
        const double s1 = std::sin(kPi * px), c1 = std::cos(kPi * px);
        const double s = s2 * c1;
        const double ds = 2 * kPi * c2 * c1 - kPi * s2 * s1;
        const double dds = -5 * kPi * kPi * s2 * c1 - 4 * kPi * kPi * c2 * s1;
        const double p = std::sin(n1 * kPi * py);
        const double dp = n1 * kPi * std::cos(n1 * kPi * py);
        const double ddp = -(n1 * kPi) * (n1 * kPi) * p;
        return Jet{s * p, ds * p, s * dp, dds * p, ds * dp, s * ddp};
      }
      const double sa = std::sin(n1 * kPi * px), ca = std::cos(n1 * kPi * px);
      const double s1 = std::sin(kPi * px), c1 = std::cos(kPi * px);
      const double r = ca * c1;
      const double dr = -n1 * kPi * sa * c1 - kPi * ca * s1;
      const double ddr = -((n1 * kPi) * (n1 * kPi) + kPi * kPi) * ca * c1 + 2 * n1 * kPi * kPi * sa * s1;
      const double arg = n2 * kPi * (kPi - py);
      const double q = std::sin(arg);
      const double dq = -n2 * kPi * std::cos(arg);
      const double ddq = -(n2 * kPi) * (n2 * kPi) * q;
      return Jet{r * q, dr * q, r * dq, ddr * q, dr * dq, r * ddq};
    });
  }
  if (name == "patch") return linear_problem(1.0, 2.0, -1.0);
  if (name == "line") {
    return from_jet(name, Mat2::Identity(), [](const Point& p) {
      const double x = p.x(), y = p.y();
      const double g = 1 + x * x + y * y * y * y;
      const double s5 = std::sin(5 * x), c5 = std::cos(5 * x), s7 = std::sin(7 * y), c7 = std::cos(7 * y);
      Jet j;
      j.u = x * x * x - x * y * y + y * x * x + x * x - x * y - x + y - 1 + s5 * s7 + std::log(g);
      j.ux = 3 * x * x - y * y + 2 * x * y + 2 * x - y - 1 + 5 * c5 * s7 + 2 * x / g;
      j.uy = -2 * x * y + x * x - x + 1 + 7 * s5 * c7 + 4 * y * y * y / g;
      j.uxx = 6 * x + 2 * y + 2 - 25 * s5 * s7 + 2 / g - 4 * x * x / (g * g);
      j.uxy = -2 * y + 2 * x - 1 + 35 * c5 * c7 - 8 * x * y * y * y / (g * g);
      j.uyy = -2 * x - 49 * s5 * s7 + 12 * y * y / g - 16 * y * y * y * y * y * y / (g * g);
      return j;
    });
  }
  if (name == "jump") {
    DiffusionProblem p;
    p.name = name;
    p.f = [](const Point&) { return 0.0; };
    p.g = [](const Point& x) { return x.x() <= 0.5 ? 1.0 : 0.0; };
    return p;
  }
  fail(ErrorCode::kInvalidArgument, "unknown problem " + name);
}

}  // namespace vemrb
