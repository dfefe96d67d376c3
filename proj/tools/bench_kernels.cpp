// Copyright 2026 The meshadv Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Benchmarks the OpenMP kernels against their serial reference twins and
// verifies that both produce identical results.
#include <chrono>
#include <cstdio>
#include <vector>

#include "meshadv/kernels.hpp"
#include "meshadv/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_points(long n, meshadv::Rng& rng) {
  Eigen::MatrixXd m(n, 3);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < 3; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  long n = argc > 1 ? std::atol(argv[1]) : 4000;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  meshadv::Rng rng(12345);
  const Eigen::MatrixXd x = random_points(n, rng);
  const Eigen::MatrixXd xp = x + 0.01 * random_points(n, rng);

  std::vector<int> pair_from, pair_to;
  for (long i = 0; i < n; ++i)
    for (long d = 1; d <= 6; ++d) {
      pair_from.push_back(static_cast<int>(i));
      pair_to.push_back(static_cast<int>((i + d) % n));
    }

  std::vector<int> idx_par, idx_ref;
  Eigen::VectorXd dist_par, dist_ref, disc_par, disc_ref;

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    meshadv::kernels::nearest_neighbors(x, xp, idx_par, dist_par);
  const double nn_par = seconds_since(t0) / reps;
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    meshadv::kernels::reference::nearest_neighbors(x, xp, idx_ref, dist_ref);
  const double nn_ref = seconds_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    meshadv::kernels::pair_distance_discrepancy(x, xp, pair_from, pair_to, disc_par);
  const double pd_par = seconds_since(t0) / reps;
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    meshadv::kernels::reference::pair_distance_discrepancy(x, xp, pair_from, pair_to, disc_ref);
  const double pd_ref = seconds_since(t0) / reps;

  const bool nn_match = idx_par == idx_ref && dist_par == dist_ref;
  const bool pd_match = disc_par == disc_ref;

  std::printf("n=%ld reps=%d\n", n, reps);
  std::printf("nearest_neighbors         parallel %8.4fs  serial %8.4fs  speedup %5.2fx  %s\n",
              nn_par, nn_ref, nn_ref / nn_par, nn_match ? "match" : "MISMATCH");
  std::printf("pair_distance_discrepancy parallel %8.4fs  serial %8.4fs  speedup %5.2fx  %s\n",
              pd_par, pd_ref, pd_ref / pd_par, pd_match ? "match" : "MISMATCH");
  return nn_match && pd_match ? 0 : 1;
}
