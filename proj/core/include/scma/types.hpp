#pragma once

#include <complex>
#include <Eigen/Dense>

namespace scma {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Bits = std::vector<std::uint8_t>;

// Frame layout: [label | signature block (K) | I data blocks of K].
struct FrameLayout {
  int K = 0;
  int I = 0;

  int label_index() const { return 0; }
  int signature_begin() const { return 1; }
  int signature_end() const { return K + 1; }  // exclusive
  int data_begin() const { return K + 1; }
  int length() const { return K * I + K + 1; }
  int data_length() const { return K * I; }
};

}  // namespace scma
