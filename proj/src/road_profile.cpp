#include "halfcar/road_profile.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace halfcar {

namespace {

constexpr int kOversample = 8;
constexpr double kEndFitSeconds = 0.05;
constexpr int kEndFitOrder = 5;

double splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return double(z >> 11) * 0x1.0p-53;  // [0, 1)
}

/// Least-squares polynomial fit over the first/last fit_len samples;
/// returns (slope, curvature) at the window endpoint.
std::pair<double, double> end_derivatives(const std::vector<double>& h,
                                          double dt, bool at_start,
                                          int fit_len, int order) {
  const int n = int(h.size());
  Eigen::MatrixXd A(fit_len, order + 1);
  Eigen::VectorXd y(fit_len);
  for (int i = 0; i < fit_len; ++i) {
    const int idx = at_start ? i : n - fit_len + i;
    const double x = at_start ? dt * i : dt * (idx - (n - 1));
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
      A(i, k) = p;
      p *= x;
    }
    y[i] = h[idx];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  return {c[1], 2.0 * c[2]};
}

/// Quintic on [0, W] matching value/slope/curvature at both ends.
std::array<double, 6> quintic_two_point(double W, double y0, double s0,
                                        double c0, double y1, double s1,
                                        double c1) {
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  b << y0, s0, c0, y1, s1, c1;
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  for (int j = 0; j < 6; ++j) {
    A(3, j) = std::pow(W, j);
    if (j >= 1) A(4, j) = j * std::pow(W, j - 1);
    if (j >= 2) A(5, j) = double(j) * (j - 1) * std::pow(W, j - 2);
  }
  Eigen::Matrix<double, 6, 1> c = A.fullPivLu().solve(b);
  std::array<double, 6> out;
  for (int i = 0; i < 6; ++i) out[i] = c[i];
  return out;
}

double poly_eval(const std::array<double, 6>& a, double x, int deriv) {
  double r = 0.0;
  for (int k = 5; k >= deriv; --k) {
    double coeff = a[k];
    for (int d = 0; d < deriv; ++d) coeff *= (k - d);
    r = r * x + coeff;
  }
  return r;
}

struct ReconData {
  double t0 = 0.0;       // window begin (absolute time)
  double width = 0.0;    // window length
  double fine_dt = 0.0;  // fine grid spacing
  std::array<double, 6> poly{};  // endpoint quintic, local time
  std::vector<double> res;       // residual on the fine grid
  std::vector<double> res_d;     // residual rate
  std::vector<double> res_dd;    // residual second derivative
};

std::pair<double, double> eval_recon(const ReconData& d, double t) {
  if (t < d.t0 - 1e-12 || t > d.t0 + d.width + 1e-12) {
    throw OutOfWindowError("road signal evaluated at t=" + std::to_string(t) +
                           " outside [" + std::to_string(d.t0) + ", " +
                           std::to_string(d.t0 + d.width) + "]");
  }
  const double tau = std::clamp(t - d.t0, 0.0, d.width);
  int j = int(tau / d.fine_dt);
  j = std::clamp(j, 0, int(d.res.size()) - 2);
  const double xi = (tau - j * d.fine_dt) / d.fine_dt;
  const double h = d.fine_dt;
  // cubic Hermite basis
  const double xi2 = xi * xi, xi3 = xi2 * xi;
  const double h00 = 2 * xi3 - 3 * xi2 + 1;
  const double h10 = xi3 - 2 * xi2 + xi;
  const double h01 = -2 * xi3 + 3 * xi2;
  const double h11 = xi3 - xi2;
  const double height = h00 * d.res[j] + h10 * h * d.res_d[j] +
                        h01 * d.res[j + 1] + h11 * h * d.res_d[j + 1];
  const double rate = h00 * d.res_d[j] + h10 * h * d.res_dd[j] +
                      h01 * d.res_d[j + 1] + h11 * h * d.res_dd[j + 1];
  return {height + poly_eval(d.poly, tau, 0), rate + poly_eval(d.poly, tau, 1)};
}

}  // namespace

RoadSignal::RoadSignal(Eval eval, double window_begin, double window_end)
    : eval_(std::move(eval)), begin_(window_begin), end_(window_end) {}

std::pair<double, double> RoadSignal::eval(double t) const {
  if (!eval_) throw InvalidInputError("road signal is empty");
  if (t < begin_ - 1e-12 || t > end_ + 1e-12) {
    throw OutOfWindowError("road signal evaluated at t=" + std::to_string(t) +
                           " outside [" + std::to_string(begin_) + ", " +
                           std::to_string(end_) + "]");
  }
  return eval_(t);
}

RoadSignal RoadSignal::flat(double height) {
  const double inf = std::numeric_limits<double>::infinity();
  return RoadSignal([height](double) { return std::pair{height, 0.0}; }, -inf, inf);
}

namespace {

struct CorrectedSpectrum {
  std::array<double, 6> poly{};             // endpoint quintic, local time
  std::vector<std::complex<double>> spec;   // mirrored residual, M bins
  int M = 0;
};

/// Validates the measurement, fits the endpoint quintic and transforms the
/// mirrored residual. Shared by reconstruct() and the band inspector.
CorrectedSpectrum corrected_spectrum(const RoadMeasurement& m) {
  const int n = int(m.heights.size());
  if (n < 8) {
    throw InsufficientDataError("road reconstruction needs at least 8 samples, got " +
                                std::to_string(n));
  }
  if (!(m.sample_period > 0.0) || !std::isfinite(m.sample_period)) {
    throw InvalidConfigError("sample_period must be positive");
  }
  for (double h : m.heights) {
    if (!std::isfinite(h)) throw InvalidInputError("road heights must be finite");
  }
  const double dt = m.sample_period;
  const double W = dt * (n - 1);

  int fit_len = std::clamp(int(std::lround(kEndFitSeconds / dt)), kEndFitOrder + 3, n / 2);
  fit_len = std::min(fit_len, n / 2);
  const int order = std::min(kEndFitOrder, fit_len - 1);
  auto [s0, c0] = end_derivatives(m.heights, dt, true, fit_len, order);
  auto [s1, c1] = end_derivatives(m.heights, dt, false, fit_len, order);

  CorrectedSpectrum out;
  out.poly = quintic_two_point(W, m.heights.front(), s0, c0, m.heights.back(), s1, c1);
  out.M = 2 * n - 2;
  std::vector<double> ext(out.M);
  for (int i = 0; i < n; ++i) ext[i] = m.heights[i] - poly_eval(out.poly, dt * i, 0);
  for (int i = 1; i < n - 1; ++i) ext[out.M - i] = ext[i];
  Eigen::FFT<double> fft;
  fft.fwd(out.spec, ext);
  return out;
}

}  // namespace

double band_spectral_amplitude(const RoadMeasurement& m, double f_lo_hz,
                               double f_hi_hz) {
  const CorrectedSpectrum cs = corrected_spectrum(m);
  const double df = 1.0 / (cs.M * m.sample_period);
  double peak = 0.0;
  for (int k = 1; k <= cs.M / 2; ++k) {
    const double f = k * df;
    if (f < f_lo_hz || f > f_hi_hz) continue;
    const double scale = (k == cs.M / 2 && cs.M % 2 == 0) ? 1.0 : 2.0;
    peak = std::max(peak, scale * std::abs(cs.spec[k]) / cs.M);
  }
  return peak;
}

RoadSignal reconstruct(const RoadMeasurement& m, double cutoff_hz) {
  const double nyquist = 0.5 / m.sample_period;
  if (!(cutoff_hz > 0.0) || cutoff_hz > nyquist + 1e-12) {
    throw InvalidConfigError("cutoff " + std::to_string(cutoff_hz) +
                             " Hz outside (0, Nyquist=" + std::to_string(nyquist) + "]");
  }
  CorrectedSpectrum cs = corrected_spectrum(m);
  const int n = int(m.heights.size());
  const double dt = m.sample_period;
  const double W = dt * (n - 1);
  const int M = cs.M;
  const auto poly = cs.poly;
  std::vector<std::complex<double>>& spec = cs.spec;

  // zero bins above the cutoff
  for (int k = 1; k < M; ++k) {
    const int kk = std::min(k, M - k);
    if (kk / (M * dt) > cutoff_hz + 1e-12) spec[k] = 0.0;
  }
  Eigen::FFT<double> fft;

  // zero-padded inverse transforms give the residual and its first two
  // derivatives on a kOversample-times finer grid
  const int Mo = kOversample * M;
  const int half = M / 2;
  const double base_omega = 2.0 * std::numbers::pi / (M * dt);
  std::vector<std::complex<double>> pad(Mo), padd(Mo), paddd(Mo);
  for (int k = 0; k <= half; ++k) {
    const bool nyq = (k == half) && (M % 2 == 0);
    std::complex<double> c = spec[k];
    if (nyq) c *= 0.5;
    const double omega = nyq ? 0.0 : base_omega * k;
    const std::complex<double> iw(0.0, omega);
    pad[k] = c;
    padd[k] = c * iw;
    paddd[k] = c * iw * iw;
    if (k > 0) {
      const int neg = Mo - k;
      pad[neg] = std::conj(pad[k]);
      padd[neg] = std::conj(padd[k]);
      paddd[neg] = std::conj(paddd[k]);
    }
  }

  const int n_fine = kOversample * (n - 1) + 1;
  auto data = std::make_shared<ReconData>();
  data->t0 = m.start_time;
  data->width = W;
  data->fine_dt = dt / kOversample;
  data->poly = poly;

  std::vector<std::complex<double>> work;
  auto inverse_into = [&](const std::vector<std::complex<double>>& p,
                          std::vector<double>& out) {
    fft.inv(work, p);  // scaled by 1/Mo
    out.resize(n_fine);
    const double scale = double(Mo) / double(M);
    for (int i = 0; i < n_fine; ++i) out[i] = work[i].real() * scale;
  };
  inverse_into(pad, data->res);
  inverse_into(padd, data->res_d);
  inverse_into(paddd, data->res_dd);

  return RoadSignal([data](double t) { return eval_recon(*data, t); },
                    data->t0, data->t0 + data->width);
}

RoadSignal rear_wheel_signal(const RoadSignal& s, const AxleDelay& d) {
  if (!(d.delta >= 0.0) || !std::isfinite(d.delta)) {
    throw InvalidConfigError("axle delay must be nonnegative");
  }
  const double delta = d.delta;
  RoadSignal base = s;
  return RoadSignal([base, delta](double t) { return base.eval(t - delta); },
                    s.window_begin() + delta, s.window_end() + delta);
}

std::vector<double> perturb_uniform(std::span<const double> values,
                                    double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw InvalidInputError("perturbation amplitude must be nonnegative");
  }
  std::uint64_t state = seed;
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) {
    const double u = splitmix64(state);
    v += (2.0 * u - 1.0) * amplitude;
  }
  return out;
}

RoadMeasurement load_road_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open road file: " + path);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw InvalidInputError(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) fail("empty file");
  ++lineno;
  std::string header = line;
  header.erase(std::remove_if(header.begin(), header.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               header.end());
  if (header != "time,height") fail("expected header 'time,height'");

  std::vector<double> times, heights;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) fail("expected 'time,height' row");
    try {
      times.push_back(std::stod(a));
      heights.push_back(std::stod(b));
    } catch (const std::exception&) {
      fail("non-numeric value");
    }
  }
  if (times.size() < 2) fail("need at least 2 samples");
  const double dt = (times.back() - times.front()) / double(times.size() - 1);
  if (!(dt > 0.0)) fail("time column must be strictly increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-9) {
      lineno = int(i) + 2;
      fail("non-uniform time spacing");
    }
  }
  RoadMeasurement m;
  m.sample_period = dt;
  m.start_time = times.front();
  m.heights = std::move(heights);
  return m;
}

RoadMeasurement generate_synthetic_road(const SyntheticRoadSpec& spec) {
  if (!(spec.end_time > spec.start_time) || !(spec.sample_period > 0.0)) {
    throw InvalidConfigError("synthetic road window or sample period invalid");
  }
  if (spec.wave_count < 0 || !(spec.freq_min_hz > 0.0) ||
      !(spec.freq_max_hz >= spec.freq_min_hz)) {
    throw InvalidConfigError("synthetic road wave configuration invalid");
  }
  struct Wave {
    double amp, freq, phase;
  };
  std::uint64_t state = spec.seed;
  std::vector<Wave> waves(spec.wave_count);
  for (Wave& w : waves) {
    w.freq = spec.freq_min_hz + (spec.freq_max_hz - spec.freq_min_hz) * splitmix64(state);
    w.phase = 2.0 * std::numbers::pi * splitmix64(state);
    w.amp = spec.wave_amplitude * (0.3 + 0.7 * splitmix64(state));
  }

  const int n = int(std::floor((spec.end_time - spec.start_time) / spec.sample_period)) + 1;
  RoadMeasurement m;
  m.sample_period = spec.sample_period;
  m.start_time = spec.start_time;
  m.heights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double t = spec.start_time + i * spec.sample_period;
    double h = 0.0;
    for (const Wave& w : waves) {
      h += w.amp * std::sin(2.0 * std::numbers::pi * w.freq * t + w.phase);
    }
    for (const BumpComponent& b : spec.bumps) {
      const double u = t - b.center;
      if (std::abs(u) < b.width / 2.0) {
        h += 0.5 * b.height * (1.0 + std::cos(2.0 * std::numbers::pi * u / b.width));
      }
    }
    m.heights[i] = h;
  }
  return m;
}

}  // namespace halfcar
