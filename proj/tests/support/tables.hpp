#pragma once

#include <array>

namespace ccopf::testing {

// Reference 14-bus results, per bus id 1..14.
struct PriceRow {
  int bus;
  double lmp_with, lpv_with, lmp_without, lpv_without;
};

inline constexpr std::array<PriceRow, 14> kTable3 = {{
    {1, 25.09, 28.57, 25.28, 1.17},  {2, 20.00, 17.13, 20.00, 0.99},  {3, 29.76, 4.07, 30.12, 0.21},
    {4, 38.20, 9.99, 38.87, 6.59},   {5, 44.27, 10.11, 45.16, 10.41}, {6, 42.29, 2.75, 43.11, 3.06},
    {7, 39.29, 11.20, 40.00, 9.40},  {8, 39.29, 3.26, 40.00, 2.95},   {9, 39.87, 6.54, 40.61, 6.06},
    {10, 40.30, 7.96, 41.05, 7.81},  {11, 41.28, 1.69, 42.06, 1.81},  {12, 42.10, 6.97, 42.91, 7.63},
    {13, 41.95, 7.94, 42.76, 8.66},  {14, 40.78, 27.35, 41.55, 28.15},
}};

inline constexpr std::array<double, 5> kDispatchWith = {332.4, 108.5, 15.0, 96.1, 26.0};
inline constexpr std::array<double, 5> kReserveWith = {0.0, 0.08, 0.0, 3.91, 11.00};
inline constexpr std::array<double, 5> kBetaWith = {0.0, 0.006, 0.0, 0.261, 0.734};
inline constexpr std::array<double, 5> kDispatchWithout = {326.0, 105.1, 17.0, 98.0, 31.9};

}  // namespace ccopf::testing
