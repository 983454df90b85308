#pragma once

#include <string_view>

namespace singlet {

enum class ScheduleKind { exponential, linear, reciprocal, constant };

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

/// Quadratic Zeeman shift q(t) in units of the interaction strength, with
/// time measured in units of its inverse.
///
///   exponential  q0 * exp(-xi t)
///   linear       q0 * (1 - t / t_max), clipped at 0
///   reciprocal   q0 / (1 + xi t)
///   constant     q0
struct SweepSchedule {
  ScheduleKind kind = ScheduleKind::exponential;
  double q0 = 0.0;
  double xi = 0.0;
  double t_max = 0.0;

  double q(double t) const;
  /// Closed-form integral of q from 0 to t.
  double integral(double t) const;
  void validate() const;
};

}  // namespace singlet
