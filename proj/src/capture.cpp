#include "subsamp/capture.hpp"

#include <stdexcept>

namespace subsamp {

SamplingPlan SamplingPlan::make(double alpha10, Eigen::VectorXd pi) {
  if (!(alpha10 >= 0.0 && alpha10 <= 1.0))
    throw std::invalid_argument("alpha10 must lie in [0,1]");
  for (Eigen::Index i = 0; i < pi.size(); ++i)
    if (!(pi[i] >= 0.0 && pi[i] <= 1.0))
      throw std::invalid_argument("second-capture probability outside [0,1]");
  SamplingPlan plan;
  plan.alpha10 = alpha10;
  plan.alpha20 = pi.size() > 0 ? pi.mean() : 0.0;
  plan.alpha0 = 1.0 - (1.0 - alpha10) * (1.0 - plan.alpha20);
  plan.pi = std::move(pi);
  return plan;
}

SamplingPlan SamplingPlan::uniform(std::int64_t n, double alpha10,
                                   double alpha20) {
  return make(alpha10, Eigen::VectorXd::Constant(n, alpha20));
}

std::vector<std::uint8_t> poisson_draw(const Eigen::VectorXd& probabilities,
                                       RngStream& stream) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(probabilities.size()));
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("probability outside [0,1]");
    out[static_cast<std::size_t>(i)] =
        (stream.next_double() < p) ? std::uint8_t{1} : std::uint8_t{0};
  }
  return out;
}

CaptureSample combine_captures(const SamplingPlan& plan,
                               std::vector<std::uint8_t> d1,
                               std::vector<std::uint8_t> d2) {
  const std::size_t n_units = static_cast<std::size_t>(plan.pi.size());
  if (d1.size() != n_units || d2.size() != n_units)
    throw std::invalid_argument("capture indicator length mismatch");
  CaptureSample sample;
  sample.d1 = std::move(d1);
  sample.d2 = std::move(d2);
  sample.d.resize(n_units);
  sample.pi = plan.pi;
  sample.alpha10 = plan.alpha10;
  sample.phi.resize(plan.pi.size());
  for (std::size_t i = 0; i < n_units; ++i) {
    sample.d[i] = (sample.d1[i] | sample.d2[i]);
    sample.phi[static_cast<Eigen::Index>(i)] =
        1.0 - (1.0 - plan.alpha10) * (1.0 - plan.pi[static_cast<Eigen::Index>(i)]);
    if (sample.d[i]) sample.sampled_indices.push_back(static_cast<std::int64_t>(i));
  }
  sample.n = static_cast<std::int64_t>(sample.sampled_indices.size());
  return sample;
}

CaptureSample capture_recapture(const SamplingPlan& plan,
                                std::uint64_t base_seed) {
  const Eigen::Index n = plan.pi.size();
  RngStream first = RngStream::derive(base_seed, kFirstCaptureStream);
  RngStream second = RngStream::derive(base_seed, kSecondCaptureStream);
  const Eigen::VectorXd uniform_p = Eigen::VectorXd::Constant(n, plan.alpha10);
  std::vector<std::uint8_t> d1 = poisson_draw(uniform_p, first);
  std::vector<std::uint8_t> d2 = poisson_draw(plan.pi, second);
  return combine_captures(plan, std::move(d1), std::move(d2));
}

}  // namespace subsamp
