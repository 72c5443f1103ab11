#include <kaonlab/inference.hpp>
#include <kaonlab/parallel.hpp>

#include <Eigen/Dense>
#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace kaonlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- Nelder-Mead ------------------------------------------------------------

struct SimplexResult {
  Eigen::VectorXd x;
  double f = kInf;
  bool converged = false;
  long evaluations = 0;
};

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                          const Eigen::VectorXd& step, int max_iter, double ftol, double xtol) {
  const int d = int(x0.size());
  std::vector<Eigen::VectorXd> v(d + 1, x0);
  std::vector<double> fv(d + 1);
  SimplexResult r;
  for (int i = 0; i < d; ++i) v[i + 1][i] += step[i];
  for (int i = 0; i <= d; ++i) fv[i] = f(v[i]);
  r.evaluations = d + 1;
  std::vector<int> idx(d + 1);
  for (int it = 0; it < max_iter; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], worst = idx[d], second = idx[d - 1];
    double diam = 0;
    for (int i = 1; i <= d; ++i) diam = std::max(diam, (v[idx[i]] - v[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] <= ftol * (1.0 + std::abs(fv[best])) && diam <= xtol) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) c += v[idx[i]];
    c /= d;
    const Eigen::VectorXd xr = c + (c - v[worst]);
    const double fr = f(xr);
    ++r.evaluations;
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - v[worst]);
      const double fe = f(xe);
      ++r.evaluations;
      if (fe < fr) v[worst] = xe, fv[worst] = fe;
      else v[worst] = xr, fv[worst] = fr;
    } else if (fr < fv[second]) {
      v[worst] = xr, fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (v[worst] - c));
      const double fc = f(xc);
      ++r.evaluations;
      if (fc < std::min(fr, fv[worst])) {
        v[worst] = xc, fv[worst] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          v[idx[i]] = v[best] + 0.5 * (v[idx[i]] - v[best]);
          fv[idx[i]] = f(v[idx[i]]);
        }
        r.evaluations += d;
      }
    }
  }
  const int b = int(std::min_element(fv.begin(), fv.end()) - fv.begin());
  r.x = v[b];
  r.f = fv[b];
  return r;
}

std::string fmt(double x) { return format_double(x); }

}  // namespace

// ---- epsilon extraction ------------------------------------------------------

EpsilonExtraction extract_epsilon(long long pairs, long long decays, const KaonParams& p, bool apply_tau_factor) {
  p.validate();
  if (pairs <= 0) throw std::invalid_argument("pairs must be > 0");
  if (pairs >= decays) throw std::invalid_argument("pairs must be < decays");
  EpsilonExtraction e;
  e.r_ratio = double(pairs) / double(decays);
  e.r_t = 1.5 * e.r_ratio;
  e.apply_tau_factor = apply_tau_factor;
  e.epsilon_abs = std::sqrt(apply_tau_factor ? e.r_t * p.tau_s() / p.tau_l() : e.r_t);
  return e;
}

// ---- fitting -----------------------------------------------------------------

double FitResult::sigma(FitParam p) const { return std::sqrt(covariance[p][p]); }

KaonParams FitResult::params(const KaonParams& base) const {
  KaonParams k = base;
  k.epsilon = std::polar(epsilon_abs, epsilon_arg);
  k.delta_m = delta_m;
  return k;
}

double binned_nll(const BinnedCounts& data, const ExpSeries& intensity) {
  double s = 0;
  for (std::size_t k = 0; k < data.bins(); ++k) {
    const double mu = intensity.integral(data.edges[k], data.edges[k + 1]);
    const double n = data.pair[k];
    if (!(mu >= 0)) return kInf;
    if (mu == 0) {
      if (n > 0) return kInf;
      continue;
    }
    s += mu - n * std::log(mu) + std::lgamma(n + 1.0);
  }
  return s;
}

FitResult fit_intensity(const BinnedCounts& data, DecayModel model, const KaonParams& init, const FitOptions& opt) {
  data.validate();
  init.validate();
  std::size_t nonempty = 0;
  double total = 0;
  for (double c : data.pair) {
    nonempty += c > 0;
    total += c;
  }
  if (total == 0) throw std::invalid_argument("fit: no pair counts in the data");
  if (nonempty < 5) throw std::invalid_argument("fit: need at least 5 nonempty bins");
  if (opt.starts < 1) throw std::invalid_argument("fit: starts must be >= 1");

  std::array<double, 4> theta0{std::abs(init.epsilon), std::arg(init.epsilon), init.delta_m, opt.i0_init};
  if (!(theta0[kI0] > 0)) {
    const double g = cronin_fitch_series(model, init, 1.0, opt.form).integral(data.edges.front(), data.edges.back());
    theta0[kI0] = g > 0 ? total / g : 1.0;
  }
  const std::array<double, 4> scale{std::max(theta0[kEpsAbs], 1e-3), 1.0, init.gamma_s, theta0[kI0]};
  const std::array<double, 4> step{0.2, 0.4, 0.05, 0.02};
  std::vector<int> fidx;
  for (int i = 0; i < 4; ++i)
    if (opt.free[i]) fidx.push_back(i);
  const int d = int(fidx.size());

  auto unpack = [&](const Eigen::VectorXd& x) {
    auto th = theta0;
    for (int i = 0; i < d; ++i) th[fidx[i]] = x[i] * scale[fidx[i]];
    return th;
  };
  auto nll_theta = [&](const std::array<double, 4>& th) {
    // a negative |eps| is the same point as arg + pi, so no wall at zero
    if (std::abs(th[kEpsAbs]) > 0.5 || th[kDeltaM] < 0 || th[kDeltaM] > 10 * init.gamma_s || !(th[kI0] > 0))
      return kInf;
    KaonParams p = init;
    p.epsilon = std::polar(1.0, th[kEpsArg]) * th[kEpsAbs];
    p.delta_m = th[kDeltaM];
    return binned_nll(data, cronin_fitch_series(model, p, th[kI0], opt.form));
  };
  auto f = [&](const Eigen::VectorXd& x) { return nll_theta(unpack(x)); };

  FitResult res;
  res.model = model;
  res.free = opt.free;
  auto fill = [&](const std::array<double, 4>& th, double nll) {
    res.epsilon_abs = std::abs(th[kEpsAbs]);
    res.epsilon_arg = wrap_phase(th[kEpsArg] + (th[kEpsAbs] < 0 ? pi : 0.0));
    res.delta_m = th[kDeltaM];
    res.i0 = th[kI0];
    res.neg_log_likelihood = nll;
  };

  if (d == 0) {
    const double nll = nll_theta(theta0);
    fill(theta0, nll);
    res.converged = std::isfinite(nll);
    if (!res.converged) throw FitFailure("fit: likelihood is infinite at the fixed parameters", res);
    return res;
  }

  Eigen::VectorXd stepv(d);
  for (int i = 0; i < d; ++i) stepv[i] = step[fidx[i]];
  SimplexResult best;
  bool any_converged = false;
  long evals = 0;
  for (int s = 0; s < opt.starts; ++s) {
    auto th = theta0;
    if (opt.free[kEpsArg]) th[kEpsArg] = theta0[kEpsArg] + 2 * pi * s / opt.starts;
    else if (opt.free[kEpsAbs]) th[kEpsAbs] = theta0[kEpsAbs] * (0.5 + 1.5 * s / opt.starts);
    else th[kI0] = theta0[kI0] * (1.0 + 0.01 * s);
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = th[fidx[i]] / scale[fidx[i]];
    auto r = nelder_mead(f, x, stepv, opt.max_iterations, 1e-12, 1e-9);
    evals += r.evaluations;
    any_converged |= r.converged;
    if (r.f < best.f || best.x.size() == 0) best = r;
  }
  // polish from the best start
  {
    auto r = nelder_mead(f, best.x, stepv * 0.05, opt.max_iterations, 1e-13, 1e-10);
    evals += r.evaluations;
    if (r.f <= best.f) best = r;
    any_converged = any_converged && (r.converged || r.f <= best.f);
  }
  fill(unpack(best.x), best.f);
  res.evaluations = evals;
  res.converged = any_converged && std::isfinite(best.f);
  if (!res.converged) throw FitFailure("fit: simplex did not converge within the iteration budget", res);

  // observed information in the scaled coordinates
  Eigen::MatrixXd H(d, d);
  const double f0 = best.f;
  Eigen::VectorXd h(d);
  for (int i = 0; i < d; ++i) h[i] = 1e-4 * std::max(1.0, std::abs(best.x[i]));
  auto fe = [&](int i, double si, int j, double sj) {
    Eigen::VectorXd x = best.x;
    x[i] += si * h[i];
    if (j >= 0) x[j] += sj * h[j];
    return f(x);
  };
  for (int i = 0; i < d; ++i) {
    H(i, i) = (fe(i, 1, -1, 0) - 2 * f0 + fe(i, -1, -1, 0)) / (h[i] * h[i]);
    for (int j = i + 1; j < d; ++j) {
      H(i, j) = H(j, i) =
          (fe(i, 1, j, 1) - fe(i, 1, j, -1) - fe(i, -1, j, 1) + fe(i, -1, j, -1)) / (4 * h[i] * h[j]);
    }
  }
  std::vector<bool> unbounded(d, false);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  if (!H.allFinite()) {
    for (int i = 0; i < d; ++i)
      if (!std::isfinite(H(i, i))) unbounded[i] = true;
    H = H.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const double lmax = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  for (int k = 0; k < d; ++k) {
    const double lam = es.eigenvalues()[k];
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    if (lam > 1e-10 * lmax) {
      C += v * v.transpose() / lam;
    } else {
      // flat direction: every parameter that moves along it is unidentified
      for (int i = 0; i < d; ++i)
        if (std::abs(v[i]) > 1e-3) unbounded[i] = true;
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const int a = fidx[i], b = fidx[j];
      double c = C(i, j) * scale[a] * scale[b];
      if (unbounded[i] || unbounded[j]) c = (i == j) ? kInf : 0.0;
      res.covariance[a][b] = c;
    }
  return res;
}

// ---- weight ratio ------------------------------------------------------------

WeightRatioEstimate weight_ratio_estimate(const BinnedCounts& data, const KaonParams& p) {
  data.validate();
  p.validate();
  const double t0 = data.edges.front(), t1 = data.edges.back();
  if (t0 > p.tau_s()) throw std::invalid_argument("weight ratio: short regime missing (data must start within tau_S)");
  if (p.delta_m <= 0 || t1 - t0 < 3 * 2 * pi / p.delta_m)
    throw std::invalid_argument("weight ratio: interference regime missing (need >= 3 oscillation periods)");
  if (t1 < 0.03 * p.tau_l()) throw std::invalid_argument("weight ratio: long regime missing (t_max < 0.03 tau_L)");

  const double gbar = 0.5 * (p.gamma_s + p.gamma_l);
  std::array<ExpSeries, 4> phi;
  phi[0].add(1.0, p.gamma_s);
  phi[1].add(1.0, p.gamma_l);
  phi[2].add(1.0, cplx(gbar, p.delta_m));             // e^{-G t} cos(dm t)
  phi[3].add(cplx(0, 1), cplx(gbar, p.delta_m));      // e^{-G t} sin(dm t)
  const int K = int(data.bins());
  Eigen::MatrixXd A(K, 4);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < 4; ++j) A(k, j) = phi[j].integral(data.edges[k], data.edges[k + 1]);
  // columns scaled to unit sum over the short and long templates; the
  // oscillating ones share the short-term scale
  Eigen::Vector4d cs;
  cs[0] = A.col(0).cwiseAbs().sum();
  cs[1] = A.col(1).cwiseAbs().sum();
  cs[2] = cs[3] = std::max(A.col(2).cwiseAbs().sum(), A.col(3).cwiseAbs().sum());
  for (int j = 0; j < 4; ++j) A.col(j) /= cs[j];
  Eigen::VectorXd n(K);
  for (int k = 0; k < K; ++k) n[k] = data.pair[k];

  // Poisson fit of the active templates: weighted least squares start, then
  // Fisher scoring with step halving. Returns the -log L (without log n!).
  auto nll = [&](const Eigen::Vector4d& x, bool& ok) {
    const Eigen::VectorXd mu = A * x;
    double s = 0;
    ok = true;
    for (int k = 0; k < K; ++k) {
      if (!(mu[k] > 0)) {
        if (mu[k] == 0 && n[k] == 0) continue;
        ok = false;
        return kInf;
      }
      s += mu[k] - n[k] * std::log(mu[k]);
    }
    return s;
  };
  auto poisson_fit = [&](const std::array<bool, 4>& active, Eigen::Vector4d& th) {
    std::vector<int> act;
    for (int j = 0; j < 4; ++j)
      if (active[j]) act.push_back(j);
    const int d = int(act.size());
    Eigen::MatrixXd Aa(K, d);
    for (int j = 0; j < d; ++j) Aa.col(j) = A.col(act[j]);
    const Eigen::VectorXd w = (n.array().max(1.0)).inverse().sqrt();
    const Eigen::VectorXd x0 = (w.asDiagonal() * Aa).colPivHouseholderQr().solve(w.cwiseProduct(n));
    th.setZero();
    for (int j = 0; j < d; ++j) th[act[j]] = x0[j];
    bool ok = false;
    double cur = nll(th, ok);
    if (!ok) {
      // the short template alone is positive everywhere
      th.setZero();
      th[0] = n.sum();
      cur = nll(th, ok);
      if (!ok) throw NumericalError("weight ratio: could not find a feasible starting point");
    }
    for (int it = 0; it < 500; ++it) {
      const Eigen::VectorXd mu = A * th;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
      Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(d, d);
      for (int k = 0; k < K; ++k) {
        if (!(mu[k] > 0)) continue;
        const Eigen::VectorXd ak = Aa.row(k).transpose();
        g += ak * (1.0 - n[k] / mu[k]);
        // expected information: empty late bins still constrain the long term
        Hm += ak * ak.transpose() / mu[k];
      }
      const Eigen::VectorXd dx = Hm.ldlt().solve(g);
      double lam = 1.0;
      bool improved = false;
      for (int h = 0; h < 60; ++h, lam *= 0.5) {
        Eigen::Vector4d xn = th;
        for (int j = 0; j < d; ++j) xn[act[j]] -= lam * dx[j];
        const double v = nll(xn, ok);
        if (ok && v <= cur) {
          improved = true;
          const double change = cur - v;
          th = xn;
          cur = v;
          if (change < 1e-13 * (1 + std::abs(cur))) it = 1 << 20;
          break;
        }
      }
      if (!improved) break;
    }
    return cur;
  };

  Eigen::Vector4d th;
  const double nll_full = poisson_fit({true, true, true, true}, th);
  // likelihood-ratio significances of the interference and long structures;
  // unlike the curvature they stay meaningful when the fit sits on mu = 0
  Eigen::Vector4d th0;
  const double z_int = std::sqrt(std::max(0.0, 2 * (poisson_fit({true, true, false, false}, th0) - nll_full)));
  const double z_long = std::sqrt(std::max(0.0, 2 * (poisson_fit({true, false, true, true}, th0) - nll_full)));

  // expected information at the optimum
  const Eigen::VectorXd mu = A * th;
  Eigen::Matrix4d I = Eigen::Matrix4d::Zero();
  for (int k = 0; k < K; ++k)
    if (mu[k] > 0) {
      const Eigen::Vector4d ak = A.row(k).transpose();
      I += ak * ak.transpose() / mu[k];
    }
  Eigen::Matrix4d cov = I.inverse();
  Eigen::Vector4d W;
  for (int j = 0; j < 4; ++j) W[j] = th[j] / cs[j];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cov(i, j) /= cs[i] * cs[j];

  WeightRatioEstimate r;
  r.w_short = W[0];
  r.w_long = W[1];
  r.w_int = std::hypot(W[2], W[3]);
  r.int_phase = std::atan2(-W[3], W[2]);  // c cos + s sin = w cos(x + phase)
  r.min_expected = mu.minCoeff();
  r.sigma_short = std::sqrt(std::max(0.0, cov(0, 0)));
  r.sigma_long = std::max(std::sqrt(std::max(0.0, cov(1, 1))), z_long > 0 ? std::abs(W[1]) / z_long : kInf);
  if (r.w_int > 0) {
    const Eigen::Vector4d gi(0, 0, W[2] / r.w_int, W[3] / r.w_int);
    r.sigma_int = std::max(std::sqrt(std::max(0.0, gi.dot(cov * gi))), z_int > 0 ? r.w_int / z_int : kInf);
  } else {
    r.sigma_int = kInf;
  }
  if (!(r.w_long > 0) || !(r.w_short > 0)) {
    r.long_nonpositive = true;
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.sigma = kInf;
    return r;
  }
  if (!(r.w_int > 2 * r.sigma_int)) {
    r.infinite = true;
    r.value = kInf;
    r.sigma = kInf;
    return r;
  }
  r.value = std::sqrt(r.w_long * r.w_short) / r.w_int;
  // delta method with the full covariance, but never below the widened
  // per-structure errors added in quadrature
  const double w2 = r.w_int * r.w_int;
  const Eigen::Vector4d grad(r.value / (2 * W[0]), r.value / (2 * W[1]), -r.value * W[2] / w2,
                             -r.value * W[3] / w2);
  const double rel = std::hypot(std::hypot(0.5 * r.sigma_short / r.w_short, 0.5 * r.sigma_long / r.w_long),
                                r.sigma_int / r.w_int);
  r.sigma = std::max(std::sqrt(std::max(0.0, grad.dot(cov * grad))), r.value * rel);
  return r;
}

// ---- discrimination ------------------------------------------------------------

std::vector<double> discrimination_edges(const ExpSeries& a, const ExpSeries& b) {
  const double fast = std::max(a.fastest_rate(), b.fastest_rate());
  const double slow = std::min(a.slowest_rate(), b.slowest_rate());
  const double w = std::max(a.max_frequency(), b.max_frequency());
  double width = 0.5 / fast;
  if (w > 0) width = std::min(width, 2 * pi / w / 8.0);
  const double t_uniform = std::min(40.0 / fast, 20.0 / slow);
  const int nu = int(std::min(400.0, std::ceil(t_uniform / width)));
  std::vector<double> e;
  for (int i = 0; i <= nu; ++i) e.push_back(t_uniform * i / nu);
  const double t_end = 20.0 / slow;
  if (t_end > t_uniform * 1.01) {
    const int nl = 40;
    for (int i = 1; i <= nl; ++i) e.push_back(t_uniform * std::pow(t_end / t_uniform, double(i) / nl));
  }
  e.push_back(kInf);
  return e;
}

PowerReport discrimination_power(DecayModel model_a, DecayModel model_b, const SuperpositionState& state,
                                 std::size_t n_events, double alpha, int trials, RunSeed seed,
                                 const PowerOptions& opt) {
  if (model_a == model_b) throw DegenerateComparisonError("model_a and model_b are the same model");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (trials < 100) throw std::invalid_argument("trials must be >= 100");
  if (n_events < 1) throw std::invalid_argument("n_events must be >= 1");

  const auto sa = pdf_series(model_a, state), sb = pdf_series(model_b, state);
  // events are drawn from model_a: it must be a genuine density
  {
    const auto r = scan_positivity(sa);
    if (r.negative) {
      std::ostringstream m;
      m << "model_a (" << to_string(model_a) << ") pdf is negative on [" << fmt(r.t_lo) << ", " << fmt(r.t_hi)
        << "] s";
      throw ModelPathologyError(m.str(), r.t_lo, r.t_hi);
    }
  }
  std::vector<double> edges = opt.edges.empty() ? discrimination_edges(sa, sb) : opt.edges;
  std::vector<double> pa, pb;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    pa.push_back(sa.integral(edges[k], edges[k + 1]) / sa.total());
    pb.push_back(sb.integral(edges[k], edges[k + 1]) / sb.total());
  }
  // merge bins where either model has no positive probability
  for (bool changed = true; changed && pa.size() > 1;) {
    changed = false;
    for (std::size_t k = 0; k < pa.size(); ++k) {
      if (pa[k] > 0 && pb[k] > 0) continue;
      const std::size_t j = (k + 1 < pa.size()) ? k + 1 : k - 1;
      const std::size_t lo = std::min(j, k);
      pa[lo] += pa[lo + 1];
      pb[lo] += pb[lo + 1];
      pa.erase(pa.begin() + lo + 1);
      pb.erase(pb.begin() + lo + 1);
      edges.erase(edges.begin() + lo + 1);
      changed = true;
      break;
    }
  }
  const std::size_t B = pa.size();
  if (B < 2) throw NumericalError("discrimination: fewer than two usable bins");
  std::vector<double> wlr(B), cum(B);
  double kl = 0, acc = 0, sum_a = std::accumulate(pa.begin(), pa.end(), 0.0),
         sum_b = std::accumulate(pb.begin(), pb.end(), 0.0);
  for (std::size_t k = 0; k < B; ++k) {
    pa[k] /= sum_a;
    pb[k] /= sum_b;
    wlr[k] = std::log(pa[k] / pb[k]);
    kl += pa[k] * wlr[k];
    acc += pa[k];
    cum[k] = acc;
  }
  cum.back() = 1.0;

  std::vector<std::size_t> grid = opt.n_grid;
  if (grid.empty()) {
    const std::size_t nmax = std::max(opt.n_max, n_events);
    for (int q = 4;; ++q) {
      const auto n = std::size_t(std::llround(std::pow(10.0, q / 4.0)));
      if (n > nmax) break;
      grid.push_back(n);
    }
  }
  grid.push_back(n_events);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::size_t G = grid.size();

  // alternative: one event stream per trial; every grid n is a prefix of it
  std::vector<double> lam_alt(std::size_t(trials) * G);
  parallel_for(std::size_t(trials), [&](std::size_t r) {
    CounterRng rng(seed, r, RngDomain::power_alt);
    double lam = 0;
    std::size_t gi = 0;
    for (std::size_t i = 1; i <= grid.back(); ++i) {
      const double u = rng.uniform();
      const std::size_t k = std::min<std::size_t>(std::size_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), B - 1);
      lam += wlr[k];
      if (i == grid[gi]) lam_alt[r * G + gi++] = lam;
    }
  });
  // null: multinomial toys under model_b, independent per grid n
  const std::size_t M = std::max<std::size_t>(opt.null_toys, std::size_t(trials));
  std::vector<double> crit(G);
  parallel_for(G, [&](std::size_t gi) {
    std::vector<double> lam(M);
    for (std::size_t m = 0; m < M; ++m) {
      CounterRng rng(seed, gi * M + m, RngDomain::power_null);
      long long left = (long long)grid[gi];
      double prem = 1.0, l = 0;
      for (std::size_t k = 0; k < B && left > 0; ++k) {
        const double q = (k + 1 == B) ? 1.0 : std::clamp(pb[k] / prem, 0.0, 1.0);
        const long long c = (q >= 1.0) ? left : boost::random::binomial_distribution<long long, double>(left, q)(rng);
        l += double(c) * wlr[k];
        left -= c;
        prem -= pb[k];
        if (prem <= 0) prem = 1e-300;
      }
      lam[m] = l;
    }
    std::sort(lam.begin(), lam.end());
    const auto idx = std::size_t(std::ceil((1.0 - alpha) * double(M))) - 1;
    crit[gi] = lam[std::min(idx, M - 1)];
  });

  PowerReport rep;
  rep.model_a = model_a;
  rep.model_b = model_b;
  rep.alpha = alpha;
  rep.trials = trials;
  rep.bins_used = B;
  rep.kl_per_event = kl;
  for (std::size_t gi = 0; gi < G; ++gi) {
    std::size_t rej = 0;
    for (int r = 0; r < trials; ++r) rej += lam_alt[std::size_t(r) * G + gi] > crit[gi];
    PowerPoint pt;
    pt.n = grid[gi];
    pt.power = double(rej) / trials;
    pt.power_se = std::sqrt(std::max(pt.power * (1 - pt.power), 1e-12) / trials);
    pt.critical_value = crit[gi];
    rep.grid.push_back(pt);
    if (grid[gi] == n_events) rep.at_n = pt;
  }
  // smallest grid n reaching the target, by bisection on the (monotone) grid
  const auto it = std::partition_point(rep.grid.begin(), rep.grid.end(),
                                       [&](const PowerPoint& p) { return p.power < opt.target_power; });
  if (it != rep.grid.end()) rep.n_required = it->n;
  return rep;
}

// ---- reports ----------------------------------------------------------------------

std::string to_text(const FitResult& r) {
  std::ostringstream o;
  o << "model: " << to_string(r.model) << '\n'
    << "converged: " << (r.converged ? "true" : "false") << '\n'
    << "neg_log_likelihood: " << fmt(r.neg_log_likelihood) << '\n'
    << "epsilon_abs: " << fmt(r.epsilon_abs) << '\n'
    << "epsilon_arg: " << fmt(r.epsilon_arg) << '\n'
    << "delta_m: " << fmt(r.delta_m) << '\n'
    << "i0: " << fmt(r.i0) << '\n';
  for (int i = 0; i < 4; ++i)
    if (r.free[i]) o << "sigma_" << fit_param_names[i] << ": " << fmt(r.sigma(FitParam(i))) << '\n';
  o << "evaluations: " << r.evaluations << '\n';
  return o.str();
}

std::string to_record(const FitResult& r) {
  std::ostringstream o;
  o << "fit model=" << to_string(r.model) << " converged=" << (r.converged ? 1 : 0)
    << " nll=" << fmt(r.neg_log_likelihood) << " epsilon_abs=" << fmt(r.epsilon_abs)
    << " epsilon_arg=" << fmt(r.epsilon_arg) << " delta_m=" << fmt(r.delta_m) << " i0=" << fmt(r.i0);
  for (int i = 0; i < 4; ++i)
    if (r.free[i]) o << " sigma_" << fit_param_names[i] << '=' << fmt(r.sigma(FitParam(i)));
  return o.str();
}

std::string to_text(const PowerReport& r) {
  std::ostringstream o;
  o << "model_a: " << to_string(r.model_a) << '\n'
    << "model_b: " << to_string(r.model_b) << '\n'
    << "alpha: " << fmt(r.alpha) << '\n'
    << "trials: " << r.trials << '\n'
    << "bins_used: " << r.bins_used << '\n'
    << "kl_per_event: " << fmt(r.kl_per_event) << '\n'
    << "n_events: " << r.at_n.n << '\n'
    << "power: " << fmt(r.at_n.power) << '\n'
    << "power_se: " << fmt(r.at_n.power_se) << '\n'
    << "n_required: " << (r.n_required ? std::to_string(*r.n_required) : std::string("none")) << '\n';
  for (const auto& p : r.grid) o << "grid: n=" << p.n << " power=" << fmt(p.power) << '\n';
  return o.str();
}

std::string to_record(const PowerReport& r) {
  std::ostringstream o;
  o << "power model_a=" << to_string(r.model_a) << " model_b=" << to_string(r.model_b) << " alpha=" << fmt(r.alpha)
    << " trials=" << r.trials << " n_events=" << r.at_n.n << " power=" << fmt(r.at_n.power)
    << " power_se=" << fmt(r.at_n.power_se)
    << " n_required=" << (r.n_required ? std::to_string(*r.n_required) : std::string("none"));
  return o.str();
}

std::string to_text(const EpsilonExtraction& r) {
  std::ostringstream o;
  o << "r_ratio: " << fmt(r.r_ratio) << '\n'
    << "r_t: " << fmt(r.r_t) << '\n'
    << "apply_tau_factor: " << (r.apply_tau_factor ? "true" : "false") << '\n'
    << "epsilon_abs: " << fmt(r.epsilon_abs) << '\n';
  return o.str();
}

std::string to_record(const EpsilonExtraction& r) {
  std::ostringstream o;
  o << "epsilon r_ratio=" << fmt(r.r_ratio) << " r_t=" << fmt(r.r_t)
    << " apply_tau_factor=" << (r.apply_tau_factor ? "true" : "false") << " epsilon_abs=" << fmt(r.epsilon_abs);
  return o.str();
}

}  // namespace kaonlab
