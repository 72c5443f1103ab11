#include <kaonlab/evolution.hpp>
#include <kaonlab/parallel.hpp>
#include <kaonlab/sampler.hpp>
#include <kaonlab/spectral_zeno.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kaonlab {

namespace {

using GL = boost::math::quadrature::gauss<double, 20>;

// sum over GL-20 nodes of f on [a, b]
template <class F>
auto gl20(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  decltype(f(c)) s{};
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

double theta_of(const EnergySpectrum& s, double e) { return std::atan(2.0 * (e - s.mass) / s.width); }

}  // namespace

double EnergySpectrum::density_at(double e) const {
  if (e < e_min || e > e_max) return 0.0;
  const double d = e - mass;
  return norm / (d * d + 0.25 * width * width);
}

double EnergySpectrum::trapezoid_mass() const {
  double s = 0;
  for (std::size_t i = 0; i + 1 < energies.size(); ++i)
    s += 0.5 * (density[i] + density[i + 1]) * (energies[i + 1] - energies[i]);
  return s;
}

EnergySpectrum lorentzian_spectrum(const ComplexEnergy& e, double e_min, double e_max, std::size_t points) {
  if (!(e.width > 0)) throw std::invalid_argument("lorentzian_spectrum: width must be > 0 (no delta spectrum)");
  if (!(e_min < e_max) || !std::isfinite(e_min) || !std::isfinite(e_max))
    throw std::invalid_argument("lorentzian_spectrum: need finite e_min < e_max");
  if (points < 3) throw std::invalid_argument("lorentzian_spectrum: need at least 3 grid points");
  EnergySpectrum s;
  s.e_min = e_min;
  s.e_max = e_max;
  s.mass = e.mass;
  s.width = e.width;
  const double ta = theta_of(s, e_min), tb = theta_of(s, e_max);
  s.norm = e.width / (2.0 * (tb - ta));
  // asinh spacing: fine over the peak, geometric in the tails, which keeps
  // the trapezoid sum within 1e-8 of the closed-form norm
  const double ua = std::asinh(2.0 * (e_min - e.mass) / e.width), ub = std::asinh(2.0 * (e_max - e.mass) / e.width);
  s.energies.resize(points);
  s.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double u = ua + (ub - ua) * double(i) / double(points - 1);
    double E = e.mass + 0.5 * e.width * std::sinh(u);
    if (i == 0) E = e_min;
    if (i + 1 == points) E = e_max;
    s.energies[i] = E;
    s.density[i] = s.density_at(E);
  }
  return s;
}

EnergySpectrum lorentzian_spectrum_symmetric(const ComplexEnergy& e, double cutoff_widths, std::size_t points) {
  if (!(cutoff_widths > 0)) throw std::invalid_argument("cutoff must be > 0 widths");
  return lorentzian_spectrum(e, e.mass - cutoff_widths * e.width, e.mass + cutoff_widths * e.width, points);
}

double captured_mass(const ComplexEnergy& e, double e_min, double e_max) {
  if (!(e.width > 0)) throw std::invalid_argument("captured_mass: width must be > 0");
  return (std::atan(2.0 * (e_max - e.mass) / e.width) - std::atan(2.0 * (e_min - e.mass) / e.width)) / pi;
}

std::string_view to_string(SurvivalConvention c) {
  return c == SurvivalConvention::autocorrelation ? "autocorrelation" : "time_operator";
}

SurvivalConvention parse_convention(std::string_view s) {
  if (s == "autocorrelation") return SurvivalConvention::autocorrelation;
  if (s == "time_operator" || s == "time-operator") return SurvivalConvention::time_operator;
  throw std::invalid_argument("unknown survival convention '" + std::string(s) + "'");
}

double survival_from_spectrum(const EnergySpectrum& spec, double t, SurvivalConvention c) {
  if (!(t >= 0)) throw std::invalid_argument("survival_from_spectrum: t must be >= 0");
  if (!(spec.width > 0) || !(spec.e_min < spec.e_max)) throw std::invalid_argument("malformed spectrum");
  if (c == SurvivalConvention::time_operator) {
    // |Psi(t)|^2 with Psi = sqrt(G) theta(t) e^{-iEt}: the energy integral runs
    // over the whole line and closes on the pole, so the tail is exact.
    return std::exp(-spec.width * t);
  }
  if (t == 0) return 1.0;
  // In theta = atan(2(E-m)/G) the density is flat: A(t) = <e^{-iE(theta)t}>.
  const double ta = theta_of(spec, spec.e_min), tb = theta_of(spec, spec.e_max);
  const int panels = 400;
  const double max_de = pi / (4.0 * t);
  auto energy = [&](double th) { return spec.mass + 0.5 * spec.width * std::tan(th); };
  cplx amp = 0;
  for (int k = 0; k < panels; ++k) {
    const double a = ta + (tb - ta) * k / panels, b = ta + (tb - ta) * (k + 1) / panels;
    const int sub = std::max(1, int(std::ceil((energy(b) - energy(a)) / max_de)));
    for (int j = 0; j < sub; ++j) {
      const double lo = a + (b - a) * j / sub, hi = a + (b - a) * (j + 1) / sub;
      amp += gl20([&](double th) { return std::polar(1.0, -energy(th) * t); }, lo, hi);
    }
  }
  amp /= (tb - ta);
  return std::min(1.0, std::norm(amp));
}

cplx fourier_amplitude_exact(const ComplexEnergy& e, double energy) {
  return std::sqrt(e.width) / cplx(0.5 * e.width, -(energy - e.mass));
}

cplx fourier_amplitude(const ComplexEnergy& e, double energy) {
  if (!(e.width > 0)) throw std::invalid_argument("fourier_amplitude: width must be > 0");
  // panels narrow enough for both the decay and the oscillation at this energy
  const double g = e.width, w = std::abs(energy - e.mass);
  const double t_end = 80.0 / g;  // e^{-40} amplitude left out
  const double dt = std::min(0.25 / g, w > 0 ? pi / (2.0 * w) : 1e300);
  const long n = std::max(1L, long(std::ceil(t_end / dt)));
  if (n > 50'000'000) throw NumericalError("fourier_amplitude: energy too far from resonance for the quadrature");
  const cplx z(0.5 * g, -(energy - e.mass));
  cplx s = 0;
  for (long k = 0; k < n; ++k) {
    const double a = t_end * double(k) / double(n), b = t_end * double(k + 1) / double(n);
    s += gl20([&](double t) { return std::exp(-z * t); }, a, b);
  }
  return std::sqrt(g) * s;
}

void MeasurementSchedule::validate() const {
  double prev = -1;
  for (double t : times) {
    if (!std::isfinite(t) || t < 0) throw std::invalid_argument("schedule: times must be finite and >= 0");
    if (t <= prev) throw std::invalid_argument("schedule: times must be strictly increasing");
    prev = t;
  }
  if (!std::isfinite(readout) || readout < 0) throw std::invalid_argument("schedule: readout must be >= 0");
  if (!times.empty() && !(times.back() < readout)) throw std::invalid_argument("schedule: times must precede readout");
}

ZenoOutcome zeno_sequence(const QuasiSpinor& initial, const KaonParams& p, const MeasurementSchedule& schedule,
                          ZenoMode mode, long long trials, RunSeed seed) {
  p.validate();
  schedule.validate();
  if (p.epsilon != 0.0)
    throw UnsupportedRegimeError("zeno: only eps = 0 (decoupled CP channels) is defined");
  const double n0 = initial.norm2();
  if (!(n0 > 0) || !std::isfinite(n0)) throw DegenerateStateError("zeno: initial state has zero norm");
  const double w1 = std::norm(initial.psi1) / n0, w2 = std::norm(initial.psi2) / n0;
  const double g1 = p.gamma_s, g2 = p.gamma_l;
  ZenoOutcome z;
  z.mode = mode;

  if (mode == ZenoMode::analytic) {
    if (schedule.times.empty()) {
      // coherent evolution, no collapse
      QuasiSpinor s = evolve_diagonal({initial.psi1 / std::sqrt(n0), initial.psi2 / std::sqrt(n0)}, p,
                                      schedule.readout);
      z.p_plus = std::norm(s.psi1);
      z.p_minus = std::norm(s.psi2);
    } else {
      // each collapse only kills the coherence; the populations step through
      double a = w1, b = w2, prev = 0;
      for (double t : schedule.times) {
        a *= std::exp(-g1 * (t - prev));
        b *= std::exp(-g2 * (t - prev));
        prev = t;
      }
      a *= std::exp(-g1 * (schedule.readout - prev));
      b *= std::exp(-g2 * (schedule.readout - prev));
      z.p_plus = a;
      z.p_minus = b;
    }
    z.p_survival = z.p_plus + z.p_minus;
    return z;
  }

  if (trials < 1) throw std::invalid_argument("zeno: trials must be >= 1");
  // 0 decayed, 1 CP=+1 at readout, 2 CP=-1 at readout
  std::vector<unsigned char> out(static_cast<std::size_t>(trials));
  parallel_for(std::size_t(trials), [&](std::size_t i) {
    CounterRng rng(seed, i, RngDomain::zeno);
    int state = 0;  // 0 superposition, 1 K1, 2 K2
    double prev = 0;
    auto step = [&](double t) -> bool {
      const double dt = t - prev;
      prev = t;
      double s1 = 0, s2 = 0;
      if (state == 0) s1 = w1 * std::exp(-g1 * dt), s2 = w2 * std::exp(-g2 * dt);
      else if (state == 1) s1 = std::exp(-g1 * dt);
      else s2 = std::exp(-g2 * dt);
      if (rng.uniform() >= s1 + s2) return false;
      state = (rng.uniform() * (s1 + s2) < s1) ? 1 : 2;
      return true;
    };
    unsigned char r = 0;
    bool alive = true;
    for (double t : schedule.times)
      if (!(alive = step(t))) break;
    if (alive && step(schedule.readout)) r = static_cast<unsigned char>(state);
    out[i] = r;
  });
  long long np = 0, nm = 0;
  for (auto r : out) np += r == 1, nm += r == 2;
  const double N = double(trials);
  z.trials = trials;
  z.p_plus = np / N;
  z.p_minus = nm / N;
  z.p_survival = (np + nm) / N;
  auto se = [&](double q) { return std::sqrt(q * (1 - q) / N); };
  z.se_plus = se(z.p_plus);
  z.se_minus = se(z.p_minus);
  z.se_survival = se(z.p_survival);
  return z;
}

std::string to_text(const ZenoOutcome& z) {
  std::ostringstream o;
  o << "mode: " << (z.mode == ZenoMode::analytic ? "analytic" : "monte_carlo") << '\n'
    << "trials: " << z.trials << '\n'
    << "p_plus: " << format_double(z.p_plus) << '\n'
    << "p_minus: " << format_double(z.p_minus) << '\n'
    << "p_survival: " << format_double(z.p_survival) << '\n';
  if (z.mode == ZenoMode::monte_carlo)
    o << "se_plus: " << format_double(z.se_plus) << '\n'
      << "se_minus: " << format_double(z.se_minus) << '\n'
      << "se_survival: " << format_double(z.se_survival) << '\n';
  return o.str();
}

std::string to_record(const ZenoOutcome& z) {
  std::ostringstream o;
  o << "zeno mode=" << (z.mode == ZenoMode::analytic ? "analytic" : "monte_carlo") << " trials=" << z.trials
    << " p_plus=" << format_double(z.p_plus) << " p_minus=" << format_double(z.p_minus)
    << " p_survival=" << format_double(z.p_survival);
  return o.str();
}

}  // namespace kaonlab
