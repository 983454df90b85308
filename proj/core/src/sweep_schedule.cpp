#include "singlet/sweep_schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace singlet {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::reciprocal: return "reciprocal";
    case ScheduleKind::constant: return "constant";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "exponential") return ScheduleKind::exponential;
  if (name == "linear") return ScheduleKind::linear;
  if (name == "reciprocal") return ScheduleKind::reciprocal;
  if (name == "constant") return ScheduleKind::constant;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

double SweepSchedule::q(double t) const {
  switch (kind) {
    case ScheduleKind::exponential: return q0 * std::exp(-xi * t);
    case ScheduleKind::linear: return t >= t_max ? 0.0 : q0 * (1.0 - t / t_max);
    case ScheduleKind::reciprocal: return q0 / (1.0 + xi * t);
    case ScheduleKind::constant: return q0;
  }
  return 0.0;
}

double SweepSchedule::integral(double t) const {
  switch (kind) {
    case ScheduleKind::exponential:
      return xi == 0.0 ? q0 * t : q0 * (-std::expm1(-xi * t)) / xi;
    case ScheduleKind::linear: {
      const double s = std::min(t, t_max);
      return q0 * (s - s * s / (2.0 * t_max));
    }
    case ScheduleKind::reciprocal:
      return xi == 0.0 ? q0 * t : q0 * std::log1p(xi * t) / xi;
    case ScheduleKind::constant: return q0 * t;
  }
  return 0.0;
}

void SweepSchedule::validate() const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("schedule t_max must be > 0");
  if (!std::isfinite(q0)) throw std::invalid_argument("schedule q0 must be finite");
  if (kind == ScheduleKind::exponential || kind == ScheduleKind::reciprocal) {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw std::invalid_argument("schedule xi must be >= 0");
  }
}

}  // namespace singlet
