// Copyright 2026 The aenet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace aenet::nnet::gemm {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;

// Row-major matrix views over raw buffers. C (m x n) is overwritten or, with
// accumulate, added to.

/// C = A (m x k) * B (k x n)
template <typename T>
void nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
        bool accumulate = false) {
  ConstMap<T> A(a, m, k);
  ConstMap<T> B(b, k, n);
  Map<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

/// C = A (m x k) * B^T, B stored (n x k)
template <typename T>
void nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
        bool accumulate = false) {
  ConstMap<T> A(a, m, k);
  ConstMap<T> B(b, n, k);
  Map<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

/// C = A^T * B, A stored (k x m), B (k x n)
template <typename T>
void tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
        bool accumulate = false) {
  ConstMap<T> A(a, k, m);
  ConstMap<T> B(b, k, n);
  Map<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

}  // namespace aenet::nnet::gemm
