#include <kaonlab/parallel.hpp>
#include <kaonlab/sampler.hpp>
#include <kaonlab/single_models.hpp>

#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace kaonlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Safeguarded Newton on an increasing G with derivative f, bracket [lo, hi].
// hi may be +inf; it is then found by doubling.
template <class G, class F>
double newton_bisect(G&& g, F&& f, double lo, double hi, double guess, double scale_time) {
  if (!std::isfinite(hi)) {
    double h = std::max(guess, lo + scale_time);
    int guard = 0;
    while (g(h) < 0) {
      lo = h;
      h = 2.0 * h + scale_time;
      if (++guard > 2000) throw NumericalError("inverse CDF: failed to bracket the quantile");
    }
    hi = h;
  }
  double t = std::clamp(guess, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double gv = g(t);
    if (gv == 0) return t;
    if (gv < 0) lo = t; else hi = t;
    const double fv = f(t);
    double tn = (fv > 0) ? t - gv / fv : 0.5 * (lo + hi);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (std::abs(tn - t) <= 2e-16 * tn || hi - lo <= 4e-16 * hi) return tn;
    t = tn;
  }
  return t;
}

void ensure_positive(const ExpSeries& s, const char* what) {
  const auto r = scan_positivity(s);
  if (r.negative) {
    std::ostringstream m;
    m << what << ": pdf is negative on [" << format_double(r.t_lo) << ", " << format_double(r.t_hi)
      << "] s (min " << format_double(r.min_value) << ")";
    throw ModelPathologyError(m.str(), r.t_lo, r.t_hi);
  }
}

Side parse_side(std::string_view s) {
  if (s == "single") return Side::single;
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw std::invalid_argument("bad side '" + std::string(s) + "'");
}

Channel parse_channel(std::string_view s) {
  if (s == "pair") return Channel::pair;
  if (s == "triplet") return Channel::triplet;
  throw std::invalid_argument("bad channel '" + std::string(s) + "'");
}

double parse_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(Side s) {
  switch (s) {
    case Side::single: return "single";
    case Side::left: return "left";
    case Side::right: return "right";
  }
  return "?";
}

std::string_view to_string(Channel c) { return c == Channel::pair ? "pair" : "triplet"; }

void DetectorConfig::validate() const {
  for (double v : {window_tau, t_min, t_max, background_rate, efficiency, branching_charged})
    require_finite(v, "detector parameter");
  if (!(t_max > t_min)) throw std::invalid_argument("detector t_max must exceed t_min");
  if (t_min < 0) throw std::invalid_argument("detector t_min must be >= 0");
  if (n_bins < 1) throw std::invalid_argument("detector n_bins must be >= 1");
  if (window_tau < 0) throw std::invalid_argument("detector window_tau must be >= 0");
  if (background_rate < 0) throw std::invalid_argument("background_rate must be >= 0");
  if (efficiency < 0 || efficiency > 1) throw std::invalid_argument("efficiency must lie in [0, 1]");
  if (branching_charged < 0 || branching_charged > 1)
    throw std::invalid_argument("branching_charged must lie in [0, 1]");
}

void BinnedCounts::validate() const {
  if (edges.size() != pair.size() + 1 || triplet.size() != pair.size() || pair.empty())
    throw std::invalid_argument("binned counts: inconsistent dimensions");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("binned counts: edges must increase");
  for (std::size_t i = 0; i < pair.size(); ++i)
    if (!(pair[i] >= 0) || !(triplet[i] >= 0)) throw std::invalid_argument("binned counts must be >= 0");
}

// ---- inverse CDF ---------------------------------------------------------

InverseCdfSampler::InverseCdfSampler(ExpSeries density) : pdf_(std::move(density)) {
  if (pdf_.empty()) throw DegenerateStateError("cannot sample an identically zero density");
  ensure_positive(pdf_, "sampler");
  total_ = pdf_.total();
  if (!(total_ > 0) || !std::isfinite(total_)) throw DegenerateStateError("density has no positive mass");

  const double slow = 1.0 / pdf_.slowest_rate();
  t_.reserve(kKnots + 64);
  t_.push_back(0.0);
  for (std::size_t j = 1; j < kKnots; ++j) {
    const double u = double(j) / double(kKnots);
    const double prev = t_.back();
    const double fp = density(prev);
    const double guess = fp > 0 ? prev + (1.0 / double(kKnots)) / fp : prev + slow / double(kKnots);
    t_.push_back(solve(u, prev, kInf, guess));
  }
  // resolve oscillations: knot spacing below period/16 up to the horizon
  if (const double w = pdf_.max_frequency(); w > 0) {
    const double max_gap = 2 * pi / w / 16.0, horizon = pdf_.oscillation_horizon();
    std::vector<double> extra;
    for (std::size_t j = 1; j < t_.size() && t_[j - 1] < horizon; ++j) {
      const double gap = t_[j] - t_[j - 1];
      if (gap <= max_gap) continue;
      const auto k = static_cast<std::size_t>(std::min(std::ceil(gap / max_gap), 1.0e5));
      for (std::size_t m = 1; m < k; ++m) extra.push_back(t_[j - 1] + gap * double(m) / double(k));
      if (extra.size() > 1000000) break;
    }
    t_.insert(t_.end(), extra.begin(), extra.end());
    std::sort(t_.begin(), t_.end());
    t_.erase(std::unique(t_.begin(), t_.end()), t_.end());
  }
  F_.resize(t_.size());
  f_.resize(t_.size());
  for (std::size_t j = 0; j < t_.size(); ++j) {
    F_[j] = cdf(t_[j]);
    f_[j] = density(t_[j]);
  }
  // rounding can make adjacent F values non-monotone by an ulp
  for (std::size_t j = 1; j < F_.size(); ++j) F_[j] = std::max(F_[j], F_[j - 1]);
}

double InverseCdfSampler::cdf(double t) const {
  if (t <= 0) return 0.0;
  const double h = pdf_.head(t) / total_;
  return h < 0.5 ? h : 1.0 - pdf_.tail(t) / total_;
}

double InverseCdfSampler::g(double t, double u) const {
  return u <= 0.5 ? pdf_.head(t) / total_ - u : (1.0 - u) - pdf_.tail(t) / total_;
}

double InverseCdfSampler::solve(double u, double lo, double hi, double guess) const {
  return newton_bisect([&](double t) { return g(t, u); }, [&](double t) { return density(t); }, lo, hi, guess,
                       1.0 / pdf_.slowest_rate());
}

double InverseCdfSampler::quantile(double u) const {
  if (!(u > 0 && u < 1)) throw std::invalid_argument("quantile needs u in (0, 1)");
  const auto it = std::upper_bound(F_.begin(), F_.end(), u);
  const std::size_t i = std::size_t(it - F_.begin()) - 1;
  if (i + 1 >= t_.size()) {
    const double tail_rate = pdf_.slowest_rate();
    const double guess = t_.back() + std::log((1.0 - F_.back()) / (1.0 - u)) / tail_rate;
    return solve(u, t_.back(), kInf, guess);
  }
  const double t0 = t_[i], t1 = t_[i + 1], dF = F_[i + 1] - F_[i];
  double guess = 0.5 * (t0 + t1);
  if (dF > 0) {
    // monotone cubic Hermite for t(F)
    const double m = (t1 - t0) / dF;
    auto slope = [&](double f) { return f > 0 ? std::min(1.0 / f, 3.0 * m) : 3.0 * m; };
    const double d0 = slope(f_[i]), d1 = slope(f_[i + 1]);
    const double s = (u - F_[i]) / dF, s2 = s * s, s3 = s2 * s;
    guess = (2 * s3 - 3 * s2 + 1) * t0 + (s3 - 2 * s2 + s) * dF * d0 + (-2 * s3 + 3 * s2) * t1 +
            (s3 - s2) * dF * d1;
  }
  return solve(u, t0, t1, std::clamp(guess, t0, t1));
}

double solve_cdf(const ExpSeries& s, double total, double u) {
  if (!(u > 0 && u < 1)) throw std::invalid_argument("quantile needs u in (0, 1)");
  auto g = [&](double t) { return u <= 0.5 ? s.head(t) / total - u : (1.0 - u) - s.tail(t) / total; };
  auto f = [&](double t) { return s(t) / total; };
  const double guess = -std::log1p(-u) / std::max(s.fastest_rate(), 1e-300);
  return newton_bisect(g, f, 0.0, kInf, guess, 1.0 / s.slowest_rate());
}

// ---- event generation ----------------------------------------------------

std::vector<DecayEvent> sample_from(const InverseCdfSampler& s, std::size_t n, RunSeed seed, Channel channel,
                                    std::uint64_t first_id) {
  std::vector<DecayEvent> ev(n);
  parallel_for(n, [&](std::size_t i) {
    CounterRng rng(seed, first_id + i, RngDomain::sample);
    ev[i] = {first_id + i, Side::single, channel, s.quantile(rng.uniform())};
  });
  return ev;
}

std::vector<DecayEvent> sample_decay_times(DecayModel model, const SuperpositionState& state, std::size_t n,
                                           RunSeed seed, Channel channel) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const InverseCdfSampler s(pdf_series(model, state));
  return sample_from(s, n, seed, channel);
}

std::vector<DecayEvent> sample_two_channel(DecayModel model, const QuasiSpinor& initial, const KaonParams& p,
                                           std::size_t n, RunSeed seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const auto law = two_channel_law(model, initial, p);
  std::optional<InverseCdfSampler> plus, minus;
  if (law.p_plus > 0) plus.emplace(law.cp_plus);
  if (law.p_plus < 1) minus.emplace(law.cp_minus);
  std::vector<DecayEvent> ev(n);
  parallel_for(n, [&](std::size_t i) {
    CounterRng rng(seed, i, RngDomain::sample);
    const bool is_plus = rng.uniform() < law.p_plus;
    const double u = rng.uniform();
    ev[i] = {i, Side::single, is_plus ? Channel::pair : Channel::triplet,
             is_plus ? plus->quantile(u) : minus->quantile(u)};
  });
  return ev;
}

std::vector<EventPair> sample_joint(DecayModel model, const BipartiteState& state, std::size_t n, RunSeed seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const auto joint = joint_pdf_series(model, state, true);
  const InverseCdfSampler marginal(joint.marginal_left());
  // the marginal can be positive while a conditional slice is not
  for (std::size_t j = 0; j < InverseCdfSampler::kKnots; j += 16) {
    const double tl = marginal.quantile((double(j) + 0.5) / double(InverseCdfSampler::kKnots));
    const auto r = scan_positivity(joint.conditional_right(tl));
    if (r.negative) {
      std::ostringstream m;
      m << "joint sampler: pdf is negative at tl = " << format_double(tl) << " s for tr in ["
        << format_double(r.t_lo) << ", " << format_double(r.t_hi) << "] s";
      throw ModelPathologyError(m.str(), r.t_lo, r.t_hi);
    }
  }
  std::vector<EventPair> out(n);
  parallel_for(n, [&](std::size_t i) {
    CounterRng rng(seed, i, RngDomain::joint);
    const double tl = marginal.quantile(rng.uniform());
    const auto cond = joint.conditional_right(tl);
    const double tr = solve_cdf(cond, cond.total(), rng.uniform());
    out[i].left = {2 * i, Side::left, Channel::pair, tl};
    out[i].right = {2 * i + 1, Side::right, Channel::pair, tr};
  });
  return out;
}

// ---- detector -------------------------------------------------------------

std::vector<double> uniform_edges(double t_min, double t_max, int n_bins) {
  if (n_bins < 1 || !(t_max > t_min)) throw std::invalid_argument("bad binning");
  std::vector<double> e(std::size_t(n_bins) + 1);
  for (int i = 0; i <= n_bins; ++i) e[i] = t_min + (t_max - t_min) * double(i) / double(n_bins);
  e.back() = t_max;
  return e;
}

BinnedCounts histogram(const std::vector<DecayEvent>& events, const std::vector<double>& edges) {
  BinnedCounts b{edges, std::vector<double>(edges.size() - 1), std::vector<double>(edges.size() - 1)};
  b.validate();
  for (const auto& e : events) {
    if (e.time < edges.front() || e.time >= edges.back()) continue;
    const std::size_t k = std::size_t(std::upper_bound(edges.begin(), edges.end(), e.time) - edges.begin()) - 1;
    (e.channel == Channel::pair ? b.pair : b.triplet)[k] += 1;
  }
  return b;
}

BinnedCounts detect(const std::vector<DecayEvent>& events, const DetectorConfig& det, RunSeed seed,
                    DetectionSummary* summary) {
  det.validate();
  const auto edges = uniform_edges(det.t_min, det.t_max, det.n_bins);
  BinnedCounts b{edges, std::vector<double>(edges.size() - 1), std::vector<double>(edges.size() - 1)};
  DetectionSummary sum;
  for (const auto& e : events) {
    if (!(e.time >= 0) || !std::isfinite(e.time)) throw std::invalid_argument("event time must be >= 0");
    CounterRng rng(seed, e.event_id, RngDomain::detector);
    const double t = e.time + (rng.uniform() - 0.5) * det.window_tau;
    const bool efficient = rng.uniform() < det.efficiency;
    const bool charged = rng.uniform() < det.branching_charged;
    if (t < det.t_min || t >= det.t_max) {
      ++sum.out_of_window;
      continue;
    }
    if (!efficient) {
      ++sum.inefficient;
      continue;
    }
    if (e.channel == Channel::pair && !charged) {
      ++sum.neutral;
      continue;
    }
    const std::size_t k = std::size_t(std::upper_bound(edges.begin(), edges.end(), t) - edges.begin()) - 1;
    (e.channel == Channel::pair ? b.pair : b.triplet)[k] += 1;
    ++sum.detected;
  }
  if (det.background_rate > 0) {
    for (std::size_t k = 0; k < b.bins(); ++k) {
      const double mean = det.background_rate * (edges[k + 1] - edges[k]);
      for (int ch = 0; ch < 2; ++ch) {
        CounterRng rng(seed, 2 * k + std::uint64_t(ch), RngDomain::background);
        boost::random::poisson_distribution<long long, double> pois(mean);
        (ch == 0 ? b.pair : b.triplet)[k] += double(pois(rng));
      }
    }
  }
  if (summary) *summary = sum;
  return b;
}

// ---- files ------------------------------------------------------------------

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

void write_events(std::ostream& os, const std::vector<DecayEvent>& events) {
  os << "event_id,side,channel,time_s\n";
  for (const auto& e : events)
    os << e.event_id << ',' << to_string(e.side) << ',' << to_string(e.channel) << ',' << format_double(e.time)
       << '\n';
}

std::vector<DecayEvent> read_events(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim_cr(line) != "event_id,side,channel,time_s")
    throw std::invalid_argument("event file: missing header 'event_id,side,channel,time_s'");
  std::vector<DecayEvent> ev;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto l = trim_cr(line);
    if (l.empty()) continue;
    const auto f = split(l, ',');
    if (f.size() != 4) throw std::invalid_argument("event file line " + std::to_string(lineno) + ": expected 4 fields");
    DecayEvent e;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), e.event_id);
    if (ec != std::errc() || p != f[0].data() + f[0].size())
      throw std::invalid_argument("event file line " + std::to_string(lineno) + ": bad event_id");
    e.side = parse_side(f[1]);
    e.channel = parse_channel(f[2]);
    e.time = parse_double(f[3]);
    if (!(e.time >= 0)) throw std::invalid_argument("event file line " + std::to_string(lineno) + ": time < 0");
    ev.push_back(e);
  }
  return ev;
}

void write_binned(std::ostream& os, const BinnedCounts& b) {
  b.validate();
  os << "bin_lo_s,bin_hi_s,pair_count,triplet_count\n";
  for (std::size_t k = 0; k < b.bins(); ++k)
    os << format_double(b.edges[k]) << ',' << format_double(b.edges[k + 1]) << ',' << (long long)b.pair[k] << ','
       << (long long)b.triplet[k] << '\n';
}

BinnedCounts read_binned(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim_cr(line) != "bin_lo_s,bin_hi_s,pair_count,triplet_count")
    throw std::invalid_argument("binned file: missing header 'bin_lo_s,bin_hi_s,pair_count,triplet_count'");
  BinnedCounts b;
  while (std::getline(is, line)) {
    const auto l = trim_cr(line);
    if (l.empty()) continue;
    const auto f = split(l, ',');
    if (f.size() != 4) throw std::invalid_argument("binned file: expected 4 fields per line");
    const double lo = parse_double(f[0]), hi = parse_double(f[1]);
    if (b.edges.empty()) b.edges.push_back(lo);
    else if (lo != b.edges.back()) throw std::invalid_argument("binned file: bins must be contiguous");
    b.edges.push_back(hi);
    b.pair.push_back(parse_double(f[2]));
    b.triplet.push_back(parse_double(f[3]));
  }
  if (b.pair.empty()) throw std::invalid_argument("binned file: no bins");
  b.validate();
  return b;
}

}  // namespace kaonlab
