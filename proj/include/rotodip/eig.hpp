#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "rotodip/errors.hpp"

#include <lapacke.h>

namespace rotodip {

struct EigResult {
  std::vector<std::complex<double>> values;
  Eigen::MatrixXcd vectors;  ///< right eigenvectors as columns; empty unless requested
};

/// Dense nonsymmetric eigendecomposition via LAPACK dgeev.
inline EigResult eig_nonsymmetric(Eigen::MatrixXd a, bool with_vectors = false) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.rows() != a.cols()) throw DomainError("eig_nonsymmetric: matrix must be square");
  EigResult out;
  if (n == 0) return out;
  std::vector<double> wr(n), wi(n);
  std::vector<double> vr(with_vectors ? static_cast<std::size_t>(n) * n : 1);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', with_vectors ? 'V' : 'N', n, a.data(), n,
                    wr.data(), wi.data(), nullptr, n, vr.data(), n);
  if (info != 0)
    throw NumericError("dgeev failed with info=" + std::to_string(info) +
                       " (n=" + std::to_string(n) + ", |A|max=" +
                       std::to_string(a.cwiseAbs().maxCoeff()) + ")");
  out.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) out.values[i] = {wr[i], wi[i]};
  if (with_vectors) {
    out.vectors.resize(n, n);
    for (lapack_int j = 0; j < n;) {
      if (wi[j] != 0.0 && j + 1 < n) {
        for (lapack_int i = 0; i < n; ++i) {
          const std::complex<double> v(vr[j * n + i], vr[(j + 1) * n + i]);
          out.vectors(i, j) = v;
          out.vectors(i, j + 1) = std::conj(v);
        }
        j += 2;
      } else {
        for (lapack_int i = 0; i < n; ++i) out.vectors(i, j) = vr[j * n + i];
        ++j;
      }
    }
  }
  return out;
}

}  // namespace rotodip
