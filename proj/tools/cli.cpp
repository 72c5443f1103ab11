#include "cli.hpp"

#include <kaonlab/kaonlab.hpp>
#include <kaonlab/parallel.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace kaonlab::cli {

namespace {

std::string num(double x) { return format_double(x); }

std::vector<Knob> make_knobs() {
  const KaonParams k;
  const DetectorConfig d;
  const std::string P = "predict", S = "simulate", D = "detect", F = "fit", X = "discriminate",
                    E = "extract-epsilon", Z = "zeno", SP = "spectrum";
  std::vector<Knob> v = {
      // global
      {"seed", "--seed", "0", "64-bit run seed", {}, "", {"7", "123456789"}},
      {"seed.stream_id", "--stream-id", "0", "stream id within the run", {}, "", {"3", "9"}},
      {"out", "--out", "", "output path (stdout if empty)", {}, "", {"first.csv", "second.csv"}},
      {"model", "--model", "twfo", "decay law: standard | hybrid | twfo", {}, "", {"standard", "hybrid"}},
      {"format", "--format", "text", "report style: text | record", {}, "", {"record", "text"}},
      {"kaon.gamma_s", "--gamma-s", num(k.gamma_s), "K_S width (1/s)", {}, "", {"1.2e10", "1.1e10"}},
      {"kaon.gamma_l", "--gamma-l", num(k.gamma_l), "K_L width (1/s)", {}, "", {"2e7", "1.8e7"}},
      {"kaon.delta_m", "--delta-m", num(k.delta_m), "mass difference m_L - m_S (1/s)", {}, "", {"5e9", "6e9"}},
      {"kaon.epsilon_abs", "--epsilon-abs", num(std::abs(k.epsilon)), "|eps|", {}, "", {"1e-3", "0"}},
      {"kaon.epsilon_arg_deg", "--epsilon-arg-deg", num(std::arg(k.epsilon) * 180 / pi), "arg eps (degrees)", {}, "",
       {"10", "-20"}},
      // state
      {"state", "--state", "k0", "k0 | k0bar | k1 | k2 | ks | kl", {P, S, X, Z}, "", {"k1", "kl"}},
      {"channel", "--channel", "plus", "CP channel: plus (pi pi) | minus (3 pi)", {P, S, X}, "", {"minus", "plus"}},
      {"pair.family", "--family", "alpha", "entangled family: alpha | beta", {P, S}, "", {"beta", "alpha"}},
      {"pair.phase", "--phase", "0", "alpha or beta phase (rad)", {P, S}, "", {"1.5", "-0.5"}},
      {"pair.beta_weights", "--beta-weights", "published", "beta-family weights: published | strict", {P, S}, "",
       {"strict", "published"}},
      {"pair.calibration", "--calibration", "1", "pair detection calibration factor", {P, S}, "", {"0.5", "2"}},
      {"joint", "--joint", "false", "entangled pair instead of a single kaon", {P, S}, "true", {}},
      // predict
      {"predict.quantity", "--quantity", "pdf", "pdf | survival | intensity", {P}, "", {"survival", "intensity"}},
      {"predict.form", "--form", "published", "intensity form: published | exact", {P, F}, "", {"exact", "published"}},
      {"grid.t_min", "--t-min", "0", "first grid time (s)", {P, SP}, "", {"1e-11", "2e-11"}},
      {"grid.t_max", "--t-max", num(20 * k.tau_s()), "last grid time (s)", {P, SP}, "", {"2e-8", "1e-9"}},
      {"grid.bins", "--bins", "400", "grid points", {P, SP}, "", {"10", "25"}},
      {"joint.bins", "--joint-bins", "50", "grid points per axis for --joint", {P}, "", {"5", "8"}},
      {"predict.strict_positivity", "--strict-positivity", "false", "negative pdf is an error (exit 3)", {P}, "true",
       {}},
      // simulate
      {"simulate.n", "--n", "10000", "events (or pairs)", {S}, "", {"100", "200"}},
      {"simulate.channels", "--channels", "one", "one | both CP channels", {S}, "", {"both", "one"}},
      // detect
      {"detect.events", "--events", "", "input event file", {D}, "", {"a.csv", "b.csv"}},
      {"detector.window_tau", "--window-tau", num(d.window_tau), "time resolution window (s)", {D}, "", {"1e-12", "2e-12"}},
      {"detector.t_min", "--t-min", num(d.t_min), "first bin edge (s)", {D}, "", {"1e-11", "2e-11"}},
      {"detector.t_max", "--t-max", num(d.t_max), "last bin edge (s)", {D}, "", {"2e-9", "3e-9"}},
      {"detector.bins", "--bins", std::to_string(d.n_bins), "number of bins", {D}, "", {"10", "20"}},
      {"detector.background_rate", "--background-rate", num(d.background_rate), "background per second per channel",
       {D}, "", {"1e9", "2e9"}},
      {"detector.efficiency", "--efficiency", num(d.efficiency), "detection efficiency", {D}, "", {"0.5", "0.25"}},
      {"detector.branching_charged", "--branching-charged", num(d.branching_charged),
       "charged fraction of CP=+1 decays", {D}, "", {"0.5", "0.75"}},
      // fit
      {"fit.data", "--data", "", "input binned file", {F}, "", {"a.csv", "b.csv"}},
      {"fit.method", "--method", "intensity", "intensity | weight-ratio", {F}, "", {"weight-ratio", "intensity"}},
      {"fit.free", "--free", "epsilon_abs,epsilon_arg,i0", "free parameters", {F}, "", {"epsilon_abs,i0", "i0"}},
      {"fit.starts", "--starts", "8", "simplex multistarts", {F}, "", {"2", "3"}},
      {"fit.i0", "--i0", "0", "starting i0 (0: from the data)", {F}, "", {"1e6", "2e6"}},
      {"fit.max_iterations", "--max-iterations", "20000", "simplex iterations per start", {F}, "", {"50", "500"}},
      // discriminate
      {"discriminate.model_a", "--model-a", "twfo", "model the events come from", {X}, "", {"hybrid", "twfo"}},
      {"discriminate.model_b", "--model-b", "standard", "null model", {X}, "", {"hybrid", "standard"}},
      {"discriminate.n_events", "--n-events", "100000", "events per experiment", {X}, "", {"1000", "3000"}},
      {"discriminate.alpha", "--alpha", "0.05", "test size", {X}, "", {"0.01", "0.1"}},
      {"discriminate.trials", "--trials", "1000", "experiments under model_a", {X}, "", {"200", "300"}},
      {"discriminate.null_toys", "--null-toys", "2000", "toys under model_b", {X}, "", {"500", "600"}},
      {"discriminate.n_max", "--n-max", "1000000", "largest n of the power grid", {X}, "", {"10000", "100000"}},
      // extract-epsilon
      {"extract.pairs", "--pairs", "45", "pion pairs", {E}, "", {"40", "50"}},
      {"extract.decays", "--decays", "22700", "all decays", {E}, "", {"20000", "30000"}},
      {"extract.tau_factor", "--no-tau-factor", "true", "drop the tau_S/tau_L factor", {E}, "false", {}},
      // zeno
      {"zeno.mode", "--mode", "analytic", "analytic | mc", {Z}, "", {"mc", "analytic"}},
      {"zeno.trials", "--trials", "100000", "Monte Carlo trajectories", {Z}, "", {"100", "200"}},
      {"zeno.times", "--times", "", "comma-separated measurement times (s)", {Z}, "", {"1e-10", "1e-10,2e-10"}},
      {"zeno.readout", "--readout", num(3 * k.tau_s()), "readout time (s)", {Z}, "", {"3e-10", "4e-10"}},
      // spectrum
      {"spectrum.cutoff", "--cutoff", "1000", "energy cutoff, in widths each side", {SP}, "", {"50", "5"}},
      {"spectrum.points", "--points", "100001", "energy grid points", {SP}, "", {"1001", "2001"}},
      {"spectrum.convention", "--convention", "autocorrelation", "autocorrelation | time_operator", {SP}, "",
       {"time_operator", "autocorrelation"}},
      {"spectrum.output", "--output", "survival", "survival | density", {SP}, "", {"density", "survival"}},
  };
  return v;
}

bool applies(const Knob& k, const std::string& cmd) {
  return k.commands.empty() || std::find(k.commands.begin(), k.commands.end(), cmd) != k.commands.end();
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// ---- typed access to resolved values ----------------------------------------

struct Values {
  const std::map<std::string, std::string>& m;

  const std::string& str(const std::string& key) const {
    auto it = m.find(key);
    if (it == m.end()) throw std::logic_error("knob not resolved: " + key);
    return it->second;
  }
  double real(const std::string& key) const {
    const auto& s = str(key);
    double x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x))
      throw UsageError(key + ": expected a number, got '" + s + "'");
    return x;
  }
  long long integer(const std::string& key) const {
    const auto& s = str(key);
    long long x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) throw UsageError(key + ": expected an integer, got '" + s + "'");
    return x;
  }
  long long positive(const std::string& key) const {
    const auto x = integer(key);
    if (x < 1) throw UsageError(key + ": must be >= 1");
    return x;
  }
  std::uint64_t u64(const std::string& key) const {
    const auto& s = str(key);
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
      throw UsageError(key + ": expected an unsigned integer, got '" + s + "'");
    return x;
  }
  bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError(key + ": expected true or false, got '" + s + "'");
  }
  std::string choice(const std::string& key, std::initializer_list<const char*> allowed) const {
    const auto& s = str(key);
    for (const char* a : allowed)
      if (s == a) return s;
    std::string msg = key + ": '" + s + "' is not one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw UsageError(msg);
  }
};

KaonParams kaon(const Values& v) {
  KaonParams p;
  p.gamma_s = v.real("kaon.gamma_s");
  p.gamma_l = v.real("kaon.gamma_l");
  p.delta_m = v.real("kaon.delta_m");
  p.epsilon = std::polar(v.real("kaon.epsilon_abs"), v.real("kaon.epsilon_arg_deg") * pi / 180.0);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

DecayModel model_of(const Values& v, const std::string& key) {
  try {
    return parse_model(v.str(key));
  } catch (const std::invalid_argument& e) {
    throw UsageError(key + ": " + e.what());
  }
}

QuasiSpinor initial_state(const Values& v, const KaonParams& p) {
  const auto s = v.choice("state", {"k0", "k0bar", "k1", "k2", "ks", "kl"});
  if (s == "k0") return cp_basis_from_strangeness(1.0, 0.0);
  if (s == "k0bar") return cp_basis_from_strangeness(0.0, 1.0);
  if (s == "k1") return {1.0, 0.0};
  if (s == "k2") return {0.0, 1.0};
  if (s == "ks") return cp_from_sl(1.0, 0.0, p.epsilon);
  return cp_from_sl(0.0, 1.0, p.epsilon);
}

SuperpositionState channel_state(const Values& v, const KaonParams& p) {
  const auto ch = v.choice("channel", {"plus", "minus"});
  const auto modes = channel_modes(initial_state(v, p), p);
  return SuperpositionState(ch == "plus" ? modes.cp_plus : modes.cp_minus);
}

BipartiteState pair_state(const Values& v, const KaonParams& p) {
  const auto fam = v.choice("pair.family", {"alpha", "beta"});
  BipartiteState s = fam == "alpha" ? BipartiteState::alpha(v.real("pair.phase"), p)
                                    : BipartiteState::beta(v.real("pair.phase"), p);
  s.beta_weights = v.choice("pair.beta_weights", {"published", "strict"}) == "strict" ? BetaWeights::strict
                                                                                      : BetaWeights::published;
  s.calibration = v.real("pair.calibration");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

RunSeed seed_of(const Values& v) {
  const auto sid = v.u64("seed.stream_id");
  if (sid >= (1u << 24)) throw UsageError("seed.stream_id: must be < 2^24");
  return {v.u64("seed"), std::uint32_t(sid)};
}

std::vector<double> time_grid(const Values& v) {
  const double a = v.real("grid.t_min"), b = v.real("grid.t_max");
  const auto n = v.positive("grid.bins");
  if (a < 0 || !(b > a)) throw UsageError("grid: need 0 <= t_min < t_max");
  std::vector<double> t(std::size_t(n), a);
  for (long long i = 1; i < n; ++i) t[i] = a + (b - a) * double(i) / double(n - 1);
  return t;
}

IntensityForm form_of(const Values& v) {
  return v.choice("predict.form", {"published", "exact"}) == "exact" ? IntensityForm::exact : IntensityForm::published;
}

void check_positive(const ExpSeries& s, const std::string& what, bool strict, std::ostream& err) {
  const auto r = scan_positivity(s);
  if (!r.negative) return;
  std::ostringstream m;
  m << what << " is negative on [" << num(r.t_lo) << ", " << num(r.t_hi) << "] s (min " << num(r.min_value) << ")";
  if (strict) throw ModelPathologyError(m.str(), r.t_lo, r.t_hi);
  err << "warning[model-pathology]: " << m.str() << '\n';
}

// ---- commands ------------------------------------------------------------------

void cmd_predict(const Values& v, std::ostream& out, std::ostream& err) {
  const auto p = kaon(v);
  const auto model = model_of(v, "model");
  const auto q = v.choice("predict.quantity", {"pdf", "survival", "intensity"});
  const bool strict = v.flag("predict.strict_positivity");
  const auto times = time_grid(v);
  if (v.flag("joint")) {
    if (q == "intensity") throw UsageError("--joint supports pdf and survival only");
    const auto s = pair_state(v, p);
    const auto n = v.positive("joint.bins");
    std::vector<double> g(std::size_t(n), times.front());
    for (long long i = 1; i < n; ++i) g[i] = times.front() + (times.back() - times.front()) * double(i) / double(n - 1);
    const auto grid = evaluate_joint(q == "pdf" ? JointQuantity::pdf : JointQuantity::survival, model, s, g, g);
    out << "tl_s,tr_s,value\n";
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) out << num(g[i]) << ',' << num(g[j]) << ',' << num(grid.at(i, j)) << '\n';
    return;
  }
  ExpSeries series;
  if (q == "intensity") {
    if (v.str("state") != "k0" || v.str("channel") != "plus")
      throw UsageError("quantity intensity is the pion-pair rate of a K0 beam (--state k0 --channel plus)");
    series = cronin_fitch_series(model, p, 1.0, form_of(v));
    check_positive(series, std::string(to_string(model)) + " intensity", strict, err);
  } else {
    const auto st = channel_state(v, p);
    series = pdf_series(model, st);
    check_positive(series, std::string(to_string(model)) + " pdf", strict, err);
    if (q == "survival") {
      // survival is the tail of the normalized pdf
      out << "t_s,value\n";
      for (double t : times) out << num(t) << ',' << num(series.tail(t) / series.total()) << '\n';
      return;
    }
  }
  const auto c = evaluate(series, times);
  out << "t_s,value\n";
  for (std::size_t i = 0; i < times.size(); ++i) out << num(times[i]) << ',' << num(c.values[i]) << '\n';
}

void cmd_simulate(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const auto model = model_of(v, "model");
  const auto n = std::size_t(v.positive("simulate.n"));
  const auto seed = seed_of(v);
  std::vector<DecayEvent> ev;
  if (v.flag("joint")) {
    for (const auto& e : sample_joint(model, pair_state(v, p), n, seed)) {
      ev.push_back(e.left);
      ev.push_back(e.right);
    }
  } else if (v.choice("simulate.channels", {"one", "both"}) == "both") {
    ev = sample_two_channel(model, initial_state(v, p), p, n, seed);
  } else {
    const auto ch = v.choice("channel", {"plus", "minus"}) == "plus" ? Channel::pair : Channel::triplet;
    ev = sample_decay_times(model, channel_state(v, p), n, seed, ch);
  }
  write_events(out, ev);
}

std::ifstream open_input(const std::string& key, const std::string& path) {
  if (path.empty()) throw UsageError(key + ": an input file is required");
  std::ifstream in(path);
  if (!in) throw UsageError(key + ": cannot open '" + path + "'");
  return in;
}

void cmd_detect(const Values& v, std::ostream& out, std::ostream& err) {
  DetectorConfig d;
  d.window_tau = v.real("detector.window_tau");
  d.t_min = v.real("detector.t_min");
  d.t_max = v.real("detector.t_max");
  d.n_bins = int(v.positive("detector.bins"));
  d.background_rate = v.real("detector.background_rate");
  d.efficiency = v.real("detector.efficiency");
  d.branching_charged = v.real("detector.branching_charged");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto seed = seed_of(v);
  auto in = open_input("detect.events", v.str("detect.events"));
  const auto events = read_events(in);
  DetectionSummary sum;
  const auto b = detect(events, d, seed, &sum);
  write_binned(out, b);
  err << "note: detected=" << sum.detected << " out_of_window=" << sum.out_of_window
      << " inefficient=" << sum.inefficient << " neutral=" << sum.neutral << '\n';
}

std::string weight_ratio_text(const WeightRatioEstimate& w, bool record) {
  std::ostringstream o;
  const std::pair<const char*, std::string> f[] = {
      {"value", num(w.value)},
      {"sigma", num(w.sigma)},
      {"infinite", w.infinite ? "true" : "false"},
      {"long_nonpositive", w.long_nonpositive ? "true" : "false"},
      {"w_short", num(w.w_short)},
      {"w_long", num(w.w_long)},
      {"w_int", num(w.w_int)},
      {"int_phase", num(w.int_phase)},
      {"sigma_short", num(w.sigma_short)},
      {"sigma_long", num(w.sigma_long)},
      {"sigma_int", num(w.sigma_int)},
  };
  if (record) {
    o << "weight_ratio";
    for (auto& [k, x] : f) o << ' ' << k << '=' << x;
    return o.str();
  }
  for (auto& [k, x] : f) o << k << ": " << x << '\n';
  return o.str();
}

void emit(std::ostream& out, const std::string& text, bool record) {
  out << text;
  if (record || text.empty() || text.back() != '\n') out << '\n';
}

void cmd_fit(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const bool record = v.choice("format", {"text", "record"}) == "record";
  const auto method = v.choice("fit.method", {"intensity", "weight-ratio"});
  auto in = open_input("fit.data", v.str("fit.data"));
  const auto data = read_binned(in);
  if (method == "weight-ratio") {
    emit(out, weight_ratio_text(weight_ratio_estimate(data, p), record), record);
    return;
  }
  FitOptions opt;
  opt.form = form_of(v);
  opt.starts = int(v.positive("fit.starts"));
  opt.i0_init = v.real("fit.i0");
  opt.max_iterations = int(v.positive("fit.max_iterations"));
  opt.free = {false, false, false, false};
  std::stringstream ss(v.str("fit.free"));
  for (std::string name; std::getline(ss, name, ',');) {
    if (name.empty()) continue;
    auto it = std::find(fit_param_names.begin(), fit_param_names.end(), name);
    if (it == fit_param_names.end()) throw UsageError("fit.free: unknown parameter '" + name + "'");
    opt.free[std::size_t(it - fit_param_names.begin())] = true;
  }
  const auto r = fit_intensity(data, model_of(v, "model"), p, opt);
  emit(out, record ? to_record(r) : to_text(r), record);
}

void cmd_discriminate(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const bool record = v.choice("format", {"text", "record"}) == "record";
  PowerOptions opt;
  opt.null_toys = std::size_t(v.positive("discriminate.null_toys"));
  opt.n_max = std::size_t(v.positive("discriminate.n_max"));
  const auto r = discrimination_power(model_of(v, "discriminate.model_a"), model_of(v, "discriminate.model_b"),
                                      channel_state(v, p), std::size_t(v.positive("discriminate.n_events")),
                                      v.real("discriminate.alpha"), int(v.positive("discriminate.trials")),
                                      seed_of(v), opt);
  emit(out, record ? to_record(r) : to_text(r), record);
}

void cmd_extract(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const bool record = v.choice("format", {"text", "record"}) == "record";
  const auto r = extract_epsilon(v.integer("extract.pairs"), v.integer("extract.decays"), p, v.flag("extract.tau_factor"));
  emit(out, record ? to_record(r) : to_text(r), record);
}

void cmd_zeno(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const bool record = v.choice("format", {"text", "record"}) == "record";
  MeasurementSchedule s;
  std::stringstream ss(v.str("zeno.times"));
  for (std::string x; std::getline(ss, x, ',');) {
    if (x.empty()) continue;
    double t = 0;
    auto [ptr, ec] = std::from_chars(x.data(), x.data() + x.size(), t);
    if (ec != std::errc() || ptr != x.data() + x.size()) throw UsageError("zeno.times: bad time '" + x + "'");
    s.times.push_back(t);
  }
  s.readout = v.real("zeno.readout");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const bool mc = v.choice("zeno.mode", {"analytic", "mc"}) == "mc";
  const auto z = zeno_sequence(initial_state(v, p), p, s, mc ? ZenoMode::monte_carlo : ZenoMode::analytic,
                               mc ? v.positive("zeno.trials") : 0, seed_of(v));
  emit(out, record ? to_record(z) : to_text(z), record);
}

void cmd_spectrum(const Values& v, std::ostream& out, std::ostream&) {
  const auto p = kaon(v);
  const ComplexEnergy e = p.short_energy();
  const auto pts = v.positive("spectrum.points");
  if (pts < 3) throw UsageError("spectrum.points: need at least 3");
  const auto spec = lorentzian_spectrum_symmetric(e, v.real("spectrum.cutoff"), std::size_t(pts));
  if (v.choice("spectrum.output", {"survival", "density"}) == "density") {
    out << "e_per_s,density\n";
    for (std::size_t i = 0; i < spec.energies.size(); ++i)
      out << num(spec.energies[i]) << ',' << num(spec.density[i]) << '\n';
    return;
  }
  SurvivalConvention c;
  try {
    c = parse_convention(v.str("spectrum.convention"));
  } catch (const std::invalid_argument& ex) {
    throw UsageError(std::string("spectrum.convention: ") + ex.what());
  }
  const auto times = time_grid(v);
  std::vector<double> val(times.size());
  parallel_for(times.size(), [&](std::size_t i) { val[i] = survival_from_spectrum(spec, times[i], c); });
  out << "t_s,value\n";
  for (std::size_t i = 0; i < times.size(); ++i) out << num(times[i]) << ',' << num(val[i]) << '\n';
}

using Handler = void (*)(const Values&, std::ostream&, std::ostream&);

const std::vector<std::pair<std::string, std::string>>& command_help() {
  static const std::vector<std::pair<std::string, std::string>> c = {
      {"predict", "decay curves (pdf, survival, pion-pair intensity, joint grids)"},
      {"simulate", "sample decay events"},
      {"detect", "bin events through a detector model"},
      {"fit", "fit a binned pion-pair spectrum"},
      {"discriminate", "likelihood-ratio power between two decay laws"},
      {"extract-epsilon", "|eps| from pion-pair and total decay counts"},
      {"zeno", "CP measurements interposed during free evolution"},
      {"spectrum", "Breit-Wigner spectrum and the survival it implies"},
  };
  return c;
}

Handler handler_for(const std::string& c) {
  if (c == "predict") return cmd_predict;
  if (c == "simulate") return cmd_simulate;
  if (c == "detect") return cmd_detect;
  if (c == "fit") return cmd_fit;
  if (c == "discriminate") return cmd_discriminate;
  if (c == "extract-epsilon") return cmd_extract;
  if (c == "zeno") return cmd_zeno;
  return cmd_spectrum;
}

struct HelpRequested {
  std::string text;
};

}  // namespace

const std::vector<Knob>& knobs() {
  static const std::vector<Knob> k = make_knobs();
  return k;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = [] {
    std::vector<std::string> v;
    for (auto& [n, h] : command_help()) v.push_back(n);
    return v;
  }();
  return c;
}

std::map<std::string, std::string> parse_config(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> m;
  std::string line;
  int no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + ":" + std::to_string(no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (std::none_of(knobs().begin(), knobs().end(), [&](const Knob& k) { return k.key == key; }))
      throw UsageError(origin + ":" + std::to_string(no) + ": unknown key '" + key + "'");
    m[key] = val;
  }
  return m;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  return parse_config(in, path);
}

Invocation parse(const std::vector<std::string>& args) {
  CLI::App app{"kaonlab: decay laws for single and entangled neutral kaons", "kaonlab"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "flat key = value configuration file");

  std::map<std::string, std::string> given;
  std::vector<std::pair<std::string, CLI::Option*>> opts;
  auto add_knob = [&](CLI::App* a, const Knob& k) {
    std::string help = k.help + " [" + k.key;
    if (!k.def.empty()) help += ", default " + k.def;
    help += "]";
    if (!k.flag_value.empty()) {
      a->add_flag_callback(k.flag, [&given, key = k.key, val = k.flag_value] { given[key] = val; }, help);
    } else {
      auto* o = a->add_option(k.flag)->description(help)->type_name("VALUE");
      opts.emplace_back(k.key, o);
    }
  };
  for (const auto& k : knobs())
    if (k.commands.empty()) add_knob(&app, k);
  for (const auto& [name, help] : command_help()) {
    auto* sub = app.add_subcommand(name, help);
    for (const auto& k : knobs())
      if (!k.commands.empty() && applies(k, name)) add_knob(sub, k);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  Invocation inv;
  for (auto* s : app.get_subcommands()) inv.command = s->get_name();
  if (inv.command.empty()) throw UsageError("a subcommand is required");
  for (auto& [key, o] : opts)
    if (o->count() > 0) given[key] = o->as<std::string>();

  const auto cfg = config_path.empty() ? std::map<std::string, std::string>{} : read_config(config_path);
  for (const auto& k : knobs()) {
    if (!applies(k, inv.command)) continue;
    if (auto g = given.find(k.key); g != given.end()) inv.values[k.key] = g->second;
    else if (auto c = cfg.find(k.key); c != cfg.end()) inv.values[k.key] = c->second;
    else inv.values[k.key] = k.def;
  }
  return inv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&](const char* tag, const std::string& what, int code) {
    err << "error[" << tag << "]: " << one_line(what) << '\n';
    return code;
  };
  try {
    const auto inv = parse(args);
    const Values v{inv.values};
    const auto& path = v.str("out");
    // render first so a failing command never leaves a truncated file
    std::ostringstream buf;
    handler_for(inv.command)(v, buf, err);
    if (path.empty()) {
      out << buf.str();
    } else {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw UsageError("--out: cannot open '" + path + "' for writing");
      f << buf.str();
      if (!f) throw UsageError("--out: write to '" + path + "' failed");
    }
    return 0;
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what(), 2);
  } catch (const DegenerateComparisonError& e) {
    return fail("usage", e.what(), 2);
  } catch (const ModelPathologyError& e) {
    return fail("model-pathology", e.what(), 3);
  } catch (const DegenerateStateError& e) {
    return fail("degenerate-state", e.what(), 3);
  } catch (const UndefinedSignatureError& e) {
    return fail("undefined-signature", e.what(), 3);
  } catch (const UnsupportedRegimeError& e) {
    return fail("unsupported-regime", e.what(), 3);
  } catch (const FitFailure& e) {
    const auto& r = e.last_iterate();
    return fail("numerical", std::string(e.what()) + " (last: " + to_record(r) + ")", 4);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("numerical", e.what(), 4);
  }
}

}  // namespace kaonlab::cli
