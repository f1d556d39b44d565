#pragma once

// Published Bayesian simulation results (median RISE, mean coverage %,
// prediction error) for the cells the simulation harness can rerun.

#include <array>
#include <cmath>
#include <optional>

#include "fbr/models.hpp"

struct ReferenceCell {
  fbr::ModelKind model;
  double noise_sd;
  int n;
  double tau;
  double rise;
  double coverage;
  std::optional<double> prediction;
};

namespace detail_cells {

using fbr::ModelKind;

// rows: tau; per n: rise, coverage, prediction
struct Block {
  ModelKind model;
  double noise_sd;
  std::array<int, 4> n;
  std::array<double, 4> tau;
  double values[4][4][3];
};

inline constexpr double kNone = -1.0;

inline const Block kBlocks[] = {
    {ModelKind::sofr_gaussian, 0.0, {100, 200, 300, 500}, {1, 2, 3, 5},
     {{{4.694, 96.4, 3.653}, {2.431, 96.7, 1.8}, {1.837, 97.1, 1.365}, {1.367, 96.3, 1.017}},
      {{1.525, 95.9, 1.121}, {0.917, 97.1, 0.691}, {0.623, 97.2, 0.457}, {0.394, 97.9, 0.278}},
      {{0.892, 96.5, 0.683}, {0.413, 97.4, 0.294}, {0.298, 98.9, 0.196}, {0.154, 99.5, 0.103}},
      {{0.334, 98.3, 0.239}, {0.148, 99.4, 0.1}, {0.111, 99.5, 0.069}, {0.067, 99.8, 0.042}}}},
    {ModelKind::sofr_bernoulli, 0.0, {100, 200, 300, 500}, {1, 2, 3, 5},
     {{{9.792, 96.4, 6.618}, {4.529, 96.0, 3.101}, {3.117, 96.8, 2.141}, {2.081, 96.3, 1.499}},
      {{2.722, 95.6, 1.862}, {1.525, 95.8, 1.155}, {1.031, 96.3, 0.765}, {0.71, 97.7, 0.514}},
      {{1.425, 96.3, 1.084}, {0.829, 96.7, 0.626}, {0.604, 97.5, 0.417}, {0.324, 98.6, 0.214}},
      {{0.748, 97.2, 0.539}, {0.34, 98.5, 0.234}, {0.213, 99.0, 0.138}, {0.126, 99.3, 0.087}}}},
    {ModelKind::cox, 0.0, {100, 200, 300, 500}, {1, 2, 3, 5},
     {{{4.281, 96.3, 3.095}, {2.288, 96.9, 1.637}, {1.763, 96.1, 1.284}, {1.261, 96.2, 0.9}},
      {{1.626, 94.8, 1.169}, {0.814, 96.7, 0.613}, {0.601, 97.3, 0.413}, {0.362, 98.4, 0.241}},
      {{0.852, 95.9, 0.664}, {0.417, 97.9, 0.283}, {0.24, 98.7, 0.164}, {0.146, 99.2, 0.095}},
      {{0.3, 98.2, 0.207}, {0.146, 99.0, 0.095}, {0.099, 99.4, 0.063}, {0.061, 99.7, 0.041}}}},
    {ModelKind::joint_cox, 5.0, {100, 200, 300, 500}, {1, 2, 3, 5},
     {{{4.739, 96.6, 3.103}, {2.742, 96.3, 1.89}, {1.8, 96.9, 1.295}, {1.297, 95.9, 0.911}},
      {{1.704, 94.5, 1.156}, {0.954, 95.7, 0.685}, {0.698, 96.3, 0.457}, {0.42, 97.0, 0.245}},
      {{0.913, 94.5, 0.703}, {0.508, 96.6, 0.331}, {0.315, 97.4, 0.198}, {0.221, 97.9, 0.115}},
      {{0.434, 95.5, 0.265}, {0.232, 97.8, 0.116}, {0.165, 97.9, 0.085}, {0.11, 98.1, 0.055}}}},
    {ModelKind::joint_cox, 10.0, {100, 200, 300, 500}, {1, 2, 3, 5},
     {{{5.788, 97.6, 3.939}, {2.782, 97.2, 1.842}, {1.912, 97.6, 1.43}, {1.293, 97.7, 0.94}},
      {{1.771, 97.2, 1.261}, {0.999, 96.7, 0.786}, {0.815, 96.5, 0.664}, {0.503, 97.7, 0.361}},
      {{1.061, 96.2, 0.807}, {0.619, 96.1, 0.446}, {0.418, 97.3, 0.288}, {0.23, 98.5, 0.143}},
      {{0.578, 95.8, 0.464}, {0.259, 97.8, 0.171}, {0.186, 98.4, 0.129}, {0.126, 99.2, 0.08}}}},
    {ModelKind::fosr, 0.0, {100, 300, 500, 700}, {0.5, 1, 2, 4},
     {{{0.0085, 99.85, kNone}, {0.0032, 99.61, kNone}, {0.0022, 99.2, kNone}, {0.0018, 98.93, kNone}},
      {{0.0025, 99.42, kNone}, {0.0012, 98.21, kNone}, {0.0009, 96.94, kNone}, {0.0008, 95.71, kNone}},
      {{0.001, 98.12, kNone}, {0.0007, 94.85, kNone}, {0.0006, 92.29, kNone}, {0.0006, 90.26, kNone}},
      {{0.0006, 91.49, kNone}, {0.0006, 84.56, kNone}, {0.0005, 78.75, kNone}, {0.0005, 73.75, kNone}}}},
};

}  // namespace detail_cells

inline std::optional<ReferenceCell> find_reference_cell(fbr::ModelKind model, int n, double tau, double noise_sd) {
  for (const auto& b : detail_cells::kBlocks) {
    if (b.model != model) continue;
    if (model == fbr::ModelKind::joint_cox && std::abs(b.noise_sd - noise_sd) > 1e-9) continue;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (b.tau[i] == tau && b.n[j] == n) {
          const double* v = b.values[i][j];
          return ReferenceCell{model, b.noise_sd, n, tau, v[0], v[1],
                               v[2] < 0 ? std::nullopt : std::optional<double>(v[2])};
        }
  }
  return std::nullopt;
}
