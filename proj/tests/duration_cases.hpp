// Crafted piano rolls with hand-counted run-length statistics.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace testdata {

inline Eigen::MatrixXi row_roll(std::initializer_list<int> values) {
  Eigen::MatrixXi roll(1, Eigen::Index(values.size()));
  Eigen::Index t = 0;
  for (int v : values) roll(0, t++) = v;
  return roll;
}

// Hand-counted survival tables for order 3: C(i, 1..3), C(i, 3+) and ã(i, 1..3).
struct DurationCase {
  std::vector<Eigen::MatrixXi> rolls;
  std::array<int64_t, 3> c_off, c_on;
  int64_t beyond_off, beyond_on;
  std::array<double, 3> a_off, a_on;
};

inline std::vector<DurationCase> duration_cases() {
  return {
      {{row_roll({1, 1, 1, 0, 0})}, {1, 1, 0}, {1, 1, 1}, 0, 0, {1, 0, 0.5}, {1, 1, 0}},
      {{row_roll({1, 0, 1, 0})}, {2, 0, 0}, {2, 0, 0}, 0, 0, {0, 0.5, 0.5}, {0, 0.5, 0.5}},
      {{row_roll({0, 0, 0, 0, 0})}, {1, 1, 1}, {0, 0, 0}, 1, 0, {1, 1, 1}, {0.5, 0.5, 0.5}},
      {{row_roll({1, 1, 1, 1, 1, 1})}, {0, 0, 0}, {1, 1, 1}, 0, 1, {0.5, 0.5, 0.5}, {1, 1, 1}},
      {{row_roll({0, 1, 1, 0, 1, 1, 1, 1, 0})}, {3, 0, 0}, {2, 2, 1}, 0, 1, {0, 0.5, 0.5}, {1, 0.5, 1}},
      {{row_roll({0, 0, 1, 0, 0, 0, 1, 1})}, {2, 2, 1}, {2, 1, 0}, 0, 0, {1, 0.5, 0}, {0.5, 0, 0.5}},
      {{row_roll({1})}, {0, 0, 0}, {1, 0, 0}, 0, 0, {0.5, 0.5, 0.5}, {0, 0.5, 0.5}},
      {{row_roll({0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0})}, {2, 2, 2}, {1, 1, 1}, 1, 1, {1, 1, 0.5}, {1, 1, 1}},
      {{row_roll({1, 1, 0, 1, 1, 0, 1, 1})}, {2, 0, 0}, {3, 3, 0}, 0, 0, {0, 0.5, 0.5}, {1, 0, 0.5}},
      {{row_roll({1, 1, 1, 1, 0}), row_roll({0, 0, 1})}, {2, 1, 0}, {2, 1, 1}, 0, 1, {0.5, 0, 0.5}, {0.5, 1, 1}},
  };
}

}  // namespace testdata
