// Copyright 2026 The DPDR Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpdr/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

constexpr int kNumOrders = kMaxOrder - kMinOrder + 1;
constexpr int kMaxBisections = 200;
// Bisection stops once the over-budget side is this close to the target.
constexpr double kCalibrationSlack = 1e-4;

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
         std::lgamma(n - k + 1.0);
}

// log(e^x - 1) for x > 0.
double LogExpm1(double x) {
  return x > 1.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
}

// log(1 + e^x).
double Log1pExp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void CheckEventParams(double q, double sigma) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ContractViolation("sampling ratio q must lie in [0, 1], got " +
                            std::to_string(q));
  }
  if (!(sigma > 0.0)) {
    throw ContractViolation("noise multiplier must be positive, got " +
                            std::to_string(sigma));
  }
}

double EpsFor(std::span<const SchedulePhase> schedule, double delta,
              double scale, double sigma_alpha, double ratio_g) {
  return LedgerForSchedule(schedule, delta, scale, sigma_alpha,
                           ratio_g * scale)
      .ToEpsDelta()
      .eps;
}

}  // namespace

void ReleaseEvent::Validate() const {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ContractViolation("sampling ratio q must lie in [0, 1]");
  }
  if (!(sigma_eff >= 0.0)) {
    throw ContractViolation("release noise multiplier must be >= 0");
  }
  if (steps < 1) throw ContractViolation("release event needs steps >= 1");
}

double RdpSubsampledGaussian(double q, double sigma, int order) {
  CheckEventParams(q, sigma);
  if (order < kMinOrder) {
    throw ContractViolation("Renyi order must be >= 2, got " +
                            std::to_string(order));
  }
  if (q == 0.0) return 0.0;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  if (q == 1.0) return order / (2.0 * sigma * sigma);

  // The binomial weights sum to one, so the series equals
  //   1 + sum_{k>=2} C(order,k) (1-q)^(order-k) q^k (e^{k(k-1)/(2s^2)} - 1)
  // which keeps full relative precision when the RDP value is tiny.
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(order - 1);
  for (int k = 2; k <= order; ++k) {
    const double t = LogBinomial(order, k) + (order - k) * log_1mq +
                     k * log_q + LogExpm1(k * (k - 1.0) * inv_two_var);
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  const double log_excess = max_term + std::log(acc);
  return Log1pExp(log_excess) / (order - 1);
}

double EffectiveSigma(double sigma_perp, double sigma_alpha) {
  if (!(sigma_perp > 0.0) || !(sigma_alpha > 0.0)) {
    throw ContractViolation("effective sigma needs positive multipliers");
  }
  return 1.0 / std::sqrt(1.0 / (sigma_perp * sigma_perp) +
                         1.0 / (sigma_alpha * sigma_alpha));
}

PrivacyLedger::PrivacyLedger(double delta)
    : delta_(delta), rdp_(kNumOrders, 0.0) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ContractViolation("delta must lie in (0, 1)");
  }
}

void PrivacyLedger::Append(const ReleaseEvent& event) {
  event.Validate();
  if (event.q != cached_q_ || event.sigma_eff != cached_sigma_) {
    cached_step_rdp_.assign(kNumOrders, 0.0);
    for (int i = 0; i < kNumOrders; ++i) {
      if (event.q == 0.0) break;
      cached_step_rdp_[i] =
          event.sigma_eff == 0.0
              ? std::numeric_limits<double>::infinity()
              : RdpSubsampledGaussian(event.q, event.sigma_eff,
                                      i + kMinOrder);
    }
    cached_q_ = event.q;
    cached_sigma_ = event.sigma_eff;
  }
  for (int i = 0; i < kNumOrders; ++i) {
    rdp_[i] += static_cast<double>(event.steps) * cached_step_rdp_[i];
  }
  events_.push_back(event);
}

EpsilonAtDelta PrivacyLedger::ToEpsDelta() const {
  if (events_.empty()) {
    throw ContractViolation("cannot convert an empty privacy ledger");
  }
  const double log_inv_delta = std::log(1.0 / delta_);
  EpsilonAtDelta best{std::numeric_limits<double>::infinity(), kMinOrder};
  for (int i = 0; i < kNumOrders; ++i) {
    const int order = i + kMinOrder;
    const double eps = rdp_[i] + log_inv_delta / (order - 1);
    if (eps < best.eps) best = {eps, order};
  }
  return best;
}

PrivacyLedger LedgerAppend(PrivacyLedger ledger, const ReleaseEvent& event) {
  ledger.Append(event);
  return ledger;
}

PrivacyLedger LedgerForSchedule(std::span<const SchedulePhase> schedule,
                                double delta, double sigma_perp,
                                double sigma_alpha, double sigma_g) {
  PrivacyLedger ledger(delta);
  for (const SchedulePhase& phase : schedule) {
    if (phase.steps == 0) continue;
    const double sigma = phase.role == PhaseRole::kGdr
                             ? EffectiveSigma(sigma_perp, sigma_alpha)
                             : sigma_g;
    ledger.Append({phase.q, sigma, phase.steps});
  }
  return ledger;
}

CalibrationResult CalibrateSigma(double eps_target, double delta,
                                 std::span<const SchedulePhase> schedule,
                                 double sigma_alpha, double ratio_g) {
  if (!(eps_target > 0.0)) throw ContractViolation("eps target must be > 0");
  if (!(sigma_alpha > 0.0)) throw ContractViolation("sigma_alpha must be > 0");
  if (!(ratio_g > 0.0)) throw ContractViolation("ratio_g must be > 0");
  bool has_gdr = false;
  bool has_steps = false;
  for (const SchedulePhase& phase : schedule) {
    if (phase.steps < 0) throw ContractViolation("negative phase length");
    if (phase.steps > 0) has_steps = true;
    if (phase.role == PhaseRole::kGdr && phase.steps > 0) has_gdr = true;
  }
  if (!has_steps) throw ContractViolation("calibration schedule is empty");

  // Infinite sigma_perp and sigma_g leave only the alpha channel.
  double eps_floor = std::log(1.0 / delta) / (kMaxOrder - 1);
  {
    PrivacyLedger alpha_only(delta);
    for (const SchedulePhase& phase : schedule) {
      if (phase.role == PhaseRole::kGdr && phase.steps > 0) {
        alpha_only.Append({phase.q, sigma_alpha, phase.steps});
      }
    }
    if (!alpha_only.empty()) eps_floor = alpha_only.ToEpsDelta().eps;
  }
  if (eps_floor >= eps_target) {
    throw InfeasibleBudget(
        "eps target " + std::to_string(eps_target) +
            " is unattainable: the alpha channel alone spends eps " +
            std::to_string(eps_floor),
        eps_floor);
  }

  auto eps_at = [&](double scale) {
    return EpsFor(schedule, delta, scale, sigma_alpha, ratio_g);
  };
  double hi = 1.0;
  while (eps_at(hi) > eps_target) {
    hi *= 2.0;
    if (hi > 1e12) {
      throw InfeasibleBudget("no finite noise multiplier meets the target",
                             eps_floor);
    }
  }
  double lo = hi / 2.0;
  while (eps_at(lo) <= eps_target) {
    hi = lo;
    lo /= 2.0;
    if (lo < 1e-12) {
      throw ContractViolation(
          "privacy budget does not constrain the noise multiplier");
    }
  }

  int iter = 0;
  double eps_hi = eps_at(hi);
  while (eps_target - eps_hi > kCalibrationSlack * eps_target) {
    if (++iter > kMaxBisections) {
      throw std::runtime_error("noise calibration did not converge after " +
                               std::to_string(kMaxBisections) +
                               " bisection steps");
    }
    const double mid = 0.5 * (lo + hi);
    const double eps_mid = eps_at(mid);
    if (eps_mid > eps_target) {
      lo = mid;
    } else {
      hi = mid;
      eps_hi = eps_mid;
    }
  }

  CalibrationResult result;
  result.sigma_perp = hi;
  result.sigma_g = ratio_g * hi;
  result.sigma_alpha = sigma_alpha;
  result.sigma_eff = EffectiveSigma(hi, sigma_alpha);
  result.achieved =
      LedgerForSchedule(schedule, delta, hi, sigma_alpha, ratio_g * hi)
          .ToEpsDelta();
  result.iterations = iter;
  result.sigma_perp_used = has_gdr;
  return result;
}

std::vector<SchedulePhase> DpdrSchedule(double q, std::int64_t total_steps,
                                        std::int64_t switch_step) {
  if (total_steps < 1) throw ContractViolation("total_steps must be >= 1");
  if (switch_step < 1 || switch_step > total_steps) {
    throw ContractViolation("switch_step must lie in [1, total_steps]");
  }
  return {{q, 1, PhaseRole::kFirst},
          {q, switch_step - 1, PhaseRole::kGdr},
          {q, total_steps - switch_step, PhaseRole::kDpsgd}};
}

}  // namespace dpdr
