#include "lio/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lio/errors.hpp"

namespace lio {

std::vector<int> knn(const Tensor& points, const Tensor& query, int k) {
  if (!points.defined() || !query.defined()) throw StateError("knn: undefined tensor");
  const auto& ps = points.shape();
  if (ps.size() != 2) throw DimensionError("knn: points must be [n,d]");
  int n = ps[0], d = ps[1];
  const auto& qs = query.shape();
  bool ok = (qs.size() == 1 && qs[0] == d) ||
            (qs.size() == 2 && qs[0] == 1 && qs[1] == d);
  if (!ok)
    throw DimensionError("knn: query shape " + shape_str(qs) + " incompatible with d=" +
                         std::to_string(d));
  if (k <= 0 || k > n)
    throw ArgumentError("knn: k=" + std::to_string(k) + " outside [1," +
                        std::to_string(n) + "]");

  const auto& pv = points.values();
  const auto& qv = query.values();
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      double diff = pv[static_cast<std::size_t>(i) * d + j] - qv[j];
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  // pair comparison gives the tie rule for free: equal distances sort by index
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

void jacobi_eigh(const std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                 std::vector<double>& vectors) {
  if (static_cast<std::size_t>(n) * n != a.size())
    throw DimensionError("jacobi_eigh: matrix size mismatch");
  std::vector<double> m = a;
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m[idx(p, q)] * m[idx(p, q)];
    if (off < 1e-24) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = m[idx(p, q)];
        if (std::abs(apq) < 1e-300) continue;
        double app = m[idx(p, p)], aqq = m[idx(q, q)];
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;

        for (int i = 0; i < n; ++i) {
          double aip = m[idx(i, p)], aiq = m[idx(i, q)];
          m[idx(i, p)] = c * aip - s * aiq;
          m[idx(i, q)] = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = m[idx(p, i)], aqi = m[idx(q, i)];
          m[idx(p, i)] = c * api - s * aqi;
          m[idx(q, i)] = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = v[idx(i, p)], viq = v[idx(i, q)];
          v[idx(i, p)] = c * vip - s * viq;
          v[idx(i, q)] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = m[idx(i, i)];
  std::stable_sort(order.begin(), order.end(),
                   [&diag](int x, int y) { return diag[x] > diag[y]; });

  eigenvalues.resize(n);
  vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) {
    int src = order[r];
    eigenvalues[r] = diag[src];
    // eigenvector for column src of v, emitted as row r
    for (int i = 0; i < n; ++i) vectors[idx(r, i)] = v[idx(i, src)];
  }
}

PcaResult pca_project(const Tensor& data, int n_components) {
  if (!data.defined()) throw StateError("pca_project: undefined tensor");
  const auto& sh = data.shape();
  if (sh.size() != 2) throw DimensionError("pca_project: data must be [n,d]");
  int n = sh[0], d = sh[1];
  if (n < 2) throw ArgumentError("pca_project: need at least 2 rows");
  if (n_components <= 0 || n_components > std::min(n, d))
    throw ArgumentError("pca_project: n_components=" + std::to_string(n_components) +
                        " outside [1," + std::to_string(std::min(n, d)) + "]");

  const auto& x = data.values();
  std::vector<double> mu(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) mu[j] += x[static_cast<std::size_t>(i) * d + j];
  for (int j = 0; j < d; ++j) mu[j] /= n;
  std::vector<double> xc(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      xc[static_cast<std::size_t>(i) * d + j] =
          x[static_cast<std::size_t>(i) * d + j] - mu[j];

  PcaResult res;
  res.mean = Tensor::from_values({1, d}, mu);
  res.explained_variance.resize(n_components);
  std::vector<double> comp(static_cast<std::size_t>(n_components) * d, 0.0);

  if (d <= n) {
    // covariance route
    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    gemm(true, false, d, d, n, 1.0 / (n - 1), xc.data(), d, xc.data(), d, 0.0,
         cov.data(), d);
    std::vector<double> evals, evecs;
    jacobi_eigh(cov, d, evals, evecs);
    for (int r = 0; r < n_components; ++r) {
      res.explained_variance[r] = std::max(0.0, evals[r]);
      std::copy(evecs.begin() + static_cast<std::ptrdiff_t>(r) * d,
                evecs.begin() + static_cast<std::ptrdiff_t>(r + 1) * d,
                comp.begin() + static_cast<std::ptrdiff_t>(r) * d);
    }
  } else {
    // Gram route: nonzero spectrum of X Xt matches Xt X
    std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0);
    gemm(false, true, n, n, d, 1.0, xc.data(), d, xc.data(), d, 0.0, gram.data(), n);
    std::vector<double> evals, evecs;
    jacobi_eigh(gram, n, evals, evecs);
    for (int r = 0; r < n_components; ++r) {
      double lam = std::max(0.0, evals[r]);
      res.explained_variance[r] = lam / (n - 1);
      // component = Xt u / |Xt u|
      std::vector<double> dir(d, 0.0);
      const double* u = evecs.data() + static_cast<std::ptrdiff_t>(r) * n;
      gemm(true, false, d, 1, n, 1.0, xc.data(), d, u, 1, 0.0, dir.data(), 1);
      double nrm = 0.0;
      for (double vv : dir) nrm += vv * vv;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-12)
        for (int j = 0; j < d; ++j)
          comp[static_cast<std::size_t>(r) * d + j] = dir[j] / nrm;
    }
  }

  res.components = Tensor::from_values({n_components, d}, comp);
  std::vector<double> proj(static_cast<std::size_t>(n) * n_components, 0.0);
  gemm(false, true, n, n_components, d, 1.0, xc.data(), d, comp.data(), d, 0.0,
       proj.data(), n_components);
  res.projected = Tensor::from_values({n, n_components}, std::move(proj));
  return res;
}

}  // namespace lio
