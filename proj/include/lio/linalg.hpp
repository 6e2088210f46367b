#pragma once

#include <vector>

#include "lio/tensor.hpp"

namespace lio {

/// Indices of the k nearest rows of `points` [n,d] to `query` [d] (or [1,d])
/// under Euclidean distance, ordered by ascending distance with ties broken
/// toward the lower index.
std::vector<int> knn(const Tensor& points, const Tensor& query, int k);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// `a` is n*n row-major and stays untouched; eigenvalues come back descending
/// with matching eigenvectors as rows of `vectors` (each length n).
void jacobi_eigh(const std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                 std::vector<double>& vectors);

struct PcaResult {
  Tensor components;  // [n_components, d], orthonormal rows
  Tensor mean;        // [1, d]
  Tensor projected;   // [n, n_components]
  std::vector<double> explained_variance;
};

/// Principal components of `data` [n,d].  Uses the Gram-matrix route when
/// d > n so the eigenproblem stays at size min(n,d).
PcaResult pca_project(const Tensor& data, int n_components);

}  // namespace lio
