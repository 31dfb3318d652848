#ifndef HALFCAR_ROAD_PROFILE_HPP
#define HALFCAR_ROAD_PROFILE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "halfcar/errors.hpp"

namespace halfcar {

/// Uniformly sampled road heights, the raw measurement format.
struct RoadMeasurement {
  double sample_period = 0.002;  ///< [s]
  double start_time = 0.0;       ///< [s]
  std::vector<double> heights;   ///< [m]

  double end_time() const {
    return start_time + sample_period * (heights.empty() ? 0.0 : double(heights.size() - 1));
  }
};

/// A road height signal with its analytic rate, valid on a closed window.
/// Evaluation outside the window throws OutOfWindowError; the signal never
/// extrapolates.
class RoadSignal {
 public:
  using Eval = std::function<std::pair<double, double>(double)>;

  RoadSignal() = default;
  RoadSignal(Eval eval, double window_begin, double window_end);

  /// (height [m], rate [m/s]) at time t.
  std::pair<double, double> eval(double t) const;
  double height(double t) const { return eval(t).first; }
  double rate(double t) const { return eval(t).second; }

  double window_begin() const { return begin_; }
  double window_end() const { return end_; }

  /// Constant-height signal valid for all time.
  static RoadSignal flat(double height);

 private:
  Eval eval_;
  double begin_ = 0.0;
  double end_ = 0.0;
};

/// Rear-axle delay: the rear wheel sees the front profile delta seconds later.
struct AxleDelay {
  double delta = 0.0;  ///< [s]
};

/// Band-limited reconstruction of the sampled profile. The samples are
/// endpoint-corrected with a quintic (least-squares end slopes/curvatures),
/// mirror-extended, transformed, and all bins above cutoff_hz are zeroed.
/// Height and rate come from the analytic derivative of the retained series.
/// Accuracy guarantees hold on the interior 80% of the window; the mirrored
/// seam leaves small artifacts near the edges.
RoadSignal reconstruct(const RoadMeasurement& m, double cutoff_hz);

/// Time-shifted view: result(t) = s(t - d.delta).
RoadSignal rear_wheel_signal(const RoadSignal& s, const AxleDelay& d);

/// Largest single-bin amplitude the reconstruction's analysis stage sees in
/// [f_lo_hz, f_hi_hz]: the endpoint-corrected, mirror-extended spectrum of
/// the samples. Useful for inspecting what a cutoff will keep or remove.
double band_spectral_amplitude(const RoadMeasurement& m, double f_lo_hz,
                               double f_hi_hz);

/// Adds i.i.d. uniform noise on [-amplitude, amplitude] from a deterministic
/// seeded generator. Same seed, same output, on every platform.
std::vector<double> perturb_uniform(std::span<const double> values,
                                    double amplitude, std::uint64_t seed);

/// CSV input with header "time,height"; the time column must be uniformly
/// spaced to within 1e-9 s.
RoadMeasurement load_road_csv(const std::string& path);

/// A raised-cosine bump: height h over [center - width/2, center + width/2].
struct BumpComponent {
  double center = 0.0;  ///< [s]
  double width = 0.5;   ///< [s]
  double height = 0.05; ///< [m], may be negative
};

/// Seeded sum-of-sinusoids profile with optional bump primitives.
struct SyntheticRoadSpec {
  double start_time = 0.0;
  double end_time = 4.0;
  double sample_period = 0.002;
  int wave_count = 4;
  double wave_amplitude = 0.012;  ///< per-wave amplitude scale [m]
  double freq_min_hz = 0.3;
  double freq_max_hz = 2.5;
  std::uint64_t seed = 7;
  std::vector<BumpComponent> bumps;
};

RoadMeasurement generate_synthetic_road(const SyntheticRoadSpec& spec);

}  // namespace halfcar

#endif  // HALFCAR_ROAD_PROFILE_HPP
