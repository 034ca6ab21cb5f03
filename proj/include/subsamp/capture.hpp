#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "subsamp/rng.hpp"

namespace subsamp {

// Two-phase Poisson sampling plan: a uniform first capture at rate alpha10
// and a second capture with per-unit probabilities pi.
struct SamplingPlan {
  double alpha10 = 0.0;
  Eigen::VectorXd pi;
  double alpha20 = 0.0;  // mean of pi
  double alpha0 = 0.0;   // 1 - (1-alpha10)(1-alpha20)

  static SamplingPlan make(double alpha10, Eigen::VectorXd pi);
  static SamplingPlan uniform(std::int64_t n, double alpha10, double alpha20);
};

struct CaptureSample {
  std::vector<std::uint8_t> d1;
  std::vector<std::uint8_t> d2;
  std::vector<std::uint8_t> d;  // d1 OR d2
  Eigen::VectorXd phi;          // 1 - (1-alpha10)(1-pi_i)
  Eigen::VectorXd pi;           // second-capture probabilities
  double alpha10 = 0.0;
  std::vector<std::int64_t> sampled_indices;
  std::int64_t n = 0;  // realized sample size
};

// Independent Bernoulli indicators, one per probability; deterministic for a
// given stream state.
std::vector<std::uint8_t> poisson_draw(const Eigen::VectorXd& probabilities,
                                       RngStream& stream);

// Executes both captures with independent streams derived from base_seed, so
// changing pi never perturbs the first-capture draw.
CaptureSample capture_recapture(const SamplingPlan& plan,
                                std::uint64_t base_seed);

// Assembles a CaptureSample from already-drawn indicators.
CaptureSample combine_captures(const SamplingPlan& plan,
                               std::vector<std::uint8_t> d1,
                               std::vector<std::uint8_t> d2);

// Stream ids for the two phases (see capture_recapture).
inline constexpr std::uint64_t kFirstCaptureStream = 0x11;
inline constexpr std::uint64_t kSecondCaptureStream = 0x22;

}  // namespace subsamp
