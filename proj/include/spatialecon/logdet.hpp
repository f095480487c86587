#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace spatialecon {

enum class LogDetMethod { lu, spectral };

inline std::string_view to_string(LogDetMethod m) { return m == LogDetMethod::lu ? "lu" : "spectral"; }

/// ln|I - rho W| as a function of rho.
///
/// `lu` factors I - rho W afresh for every rho. `spectral` computes the (complex)
/// eigenvalues of W once and uses det(I - rho W) = prod_i (1 - rho lambda_i), which
/// pays off when one W is shared by many fits.
/// Returns NaN when I - rho W is singular or has a non-positive determinant.
class LogDeterminant {
 public:
  explicit LogDeterminant(const Eigen::MatrixXd& w, LogDetMethod method = LogDetMethod::lu)
      : method_(method) {
    if (method_ == LogDetMethod::lu) {
      w_ = w;
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> solver(w, false);
      eigenvalues_ = solver.eigenvalues();
    }
  }

  LogDetMethod method() const noexcept { return method_; }

  double operator()(double rho) const {
    if (rho == 0.0) return 0.0;
    return method_ == LogDetMethod::lu ? via_lu(rho) : via_spectrum(rho);
  }

 private:
  double via_lu(double rho) const {
    const auto n = w_.rows();
    Eigen::MatrixXd a = -rho * w_;
    a.diagonal().array() += 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const auto& packed = lu.matrixLU();
    double logdet = 0.0;
    double sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = packed(i, i);
      if (u == 0.0) return std::numeric_limits<double>::quiet_NaN();
      if (u < 0.0) sign = -sign;
      logdet += std::log(std::abs(u));
    }
    return sign > 0.0 ? logdet : std::numeric_limits<double>::quiet_NaN();
  }

  double via_spectrum(double rho) const {
    double logdet = 0.0;
    double real_sign = 1.0;
    for (const std::complex<double>& ev : eigenvalues_) {
      const std::complex<double> factor = 1.0 - rho * ev;
      const double modulus = std::abs(factor);
      if (modulus <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(rho * ev))) return std::numeric_limits<double>::quiet_NaN();
      // complex factors come in conjugate pairs with positive product
      if (ev.imag() == 0.0 && factor.real() < 0.0) real_sign = -real_sign;
      logdet += std::log(modulus);
    }
    return real_sign > 0.0 ? logdet : std::numeric_limits<double>::quiet_NaN();
  }

  LogDetMethod method_;
  Eigen::MatrixXd w_;
  Eigen::VectorXcd eigenvalues_;
};

}  // namespace spatialecon
