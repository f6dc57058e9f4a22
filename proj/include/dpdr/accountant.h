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

#ifndef DPDR_ACCOUNTANT_H_
#define DPDR_ACCOUNTANT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dpdr {

// `steps` identical Poisson-subsampled Gaussian releases with sampling ratio
// q and noise multiplier sigma_eff (noise std over L2 sensitivity). A zero
// sigma_eff marks a non-private ablation release and costs infinite RDP.
struct ReleaseEvent {
  double q = 0.0;
  double sigma_eff = 1.0;
  std::int64_t steps = 1;

  void Validate() const;
  friend bool operator==(const ReleaseEvent&, const ReleaseEvent&) = default;
};

inline constexpr int kMinOrder = 2;
inline constexpr int kMaxOrder = 256;

// RDP of one Poisson-subsampled Gaussian release at integer order `order`:
//   1/(order-1) * log sum_k C(order,k) (1-q)^(order-k) q^k e^{k(k-1)/(2s^2)}
// and order/(2 s^2) when q == 1. Evaluated in log space.
double RdpSubsampledGaussian(double q, double sigma, int order);

// Multiplier of the single Gaussian mechanism equivalent to releasing two
// unit-sensitivity blocks with independent noise multipliers.
double EffectiveSigma(double sigma_perp, double sigma_alpha);

struct EpsilonAtDelta {
  double eps = 0.0;
  int order = kMinOrder;
};

// Ordered record of releases with RDP accumulated over orders 2..256.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double delta);

  void Append(const ReleaseEvent& event);

  double delta() const { return delta_; }
  const std::vector<ReleaseEvent>& events() const { return events_; }
  // Accumulated RDP indexed by order - kMinOrder.
  const std::vector<double>& rdp() const { return rdp_; }
  bool empty() const { return events_.empty(); }

  // min over orders of rdp(order) + log(1/delta)/(order-1). Throws
  // ContractViolation on an empty ledger.
  EpsilonAtDelta ToEpsDelta() const;

 private:
  double delta_;
  std::vector<ReleaseEvent> events_;
  std::vector<double> rdp_;
  // Per-step RDP of the most recent (q, sigma) pair.
  double cached_q_ = -1.0;
  double cached_sigma_ = -1.0;
  std::vector<double> cached_step_rdp_;
};

// Returns a copy of `ledger` with `event` appended.
PrivacyLedger LedgerAppend(PrivacyLedger ledger, const ReleaseEvent& event);

enum class PhaseRole { kFirst, kGdr, kDpsgd };

struct SchedulePhase {
  double q = 0.0;
  std::int64_t steps = 0;
  PhaseRole role = PhaseRole::kDpsgd;
};

struct CalibrationResult {
  double sigma_perp = 0.0;
  double sigma_g = 0.0;
  double sigma_alpha = 0.0;
  double sigma_eff = 0.0;
  EpsilonAtDelta achieved;
  int iterations = 0;
  // False when the schedule contains no GDR steps, so sigma_perp only
  // tracks the search scale.
  bool sigma_perp_used = true;
};

// Builds the ledger a schedule produces: GDR phases at
// EffectiveSigma(sigma_perp, sigma_alpha), first/DP-SGD phases at sigma_g.
// Phases with zero steps are skipped.
PrivacyLedger LedgerForSchedule(std::span<const SchedulePhase> schedule,
                                double delta, double sigma_perp,
                                double sigma_alpha, double sigma_g);

// Finds the scale s with sigma_perp = s and sigma_g = ratio_g * s whose
// ledger spends eps_target within 1e-3 relative. The returned noise never
// overspends: achieved eps <= eps_target.
// Throws InfeasibleBudget when sigma_alpha alone already exceeds the budget.
CalibrationResult CalibrateSigma(double eps_target, double delta,
                                 std::span<const SchedulePhase> schedule,
                                 double sigma_alpha, double ratio_g = 1.0);

// Standard DPDR schedule: step 1 first, steps 2..s GDR, the rest DP-SGD.
std::vector<SchedulePhase> DpdrSchedule(double q, std::int64_t total_steps,
                                        std::int64_t switch_step);

}  // namespace dpdr

#endif  // DPDR_ACCOUNTANT_H_
