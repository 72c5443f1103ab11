#include <doctest.h>

#include "cli.hpp"

#include <kaonlab/kaonlab.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace kaonlab;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

fs::path tmp(const std::string& name) {
  fs::path d(KAONLAB_TEST_TMP);
  fs::create_directories(d);
  return d / name;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto p = tmp(name);
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// t,value rows of a curve
std::vector<std::pair<double, double>> rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> v;
  while (std::getline(in, line)) {
    const auto c = line.find(',');
    v.emplace_back(std::stod(line.substr(0, c)), std::stod(line.substr(c + 1)));
  }
  return v;
}

std::string field(const std::string& text, const std::string& key) {
  const auto p = text.find(key + ": ");
  REQUIRE(p != std::string::npos);
  const auto a = p + key.size() + 2;
  return text.substr(a, text.find('\n', a) - a);
}

bool one_error_line(const Result& r, const std::string& tag) {
  return r.err.rfind("error[" + tag + "]: ", 0) == 0 && std::count(r.err.begin(), r.err.end(), '\n') == 1;
}

}  // namespace

TEST_CASE("every knob: flag beats config beats default") {
  for (const auto& cmd : cli::commands()) {
    for (const auto& k : cli::knobs()) {
      if (!k.commands.empty() && std::find(k.commands.begin(), k.commands.end(), cmd) == k.commands.end()) continue;
      CAPTURE(cmd);
      CAPTURE(k.key);
      CHECK(cli::parse({cmd}).values.at(k.key) == k.def);
      if (k.flag_value.empty()) {
        REQUIRE(k.samples.size() == 2);
        REQUIRE(k.samples[0] != k.def);
        const auto cfg = write_file("knob.cfg", "# test\n" + k.key + " = " + k.samples[0] + "\n");
        CHECK(cli::parse({cmd, "--config", cfg}).values.at(k.key) == k.samples[0]);
        CHECK(cli::parse({cmd, "--config", cfg, k.flag, k.samples[1]}).values.at(k.key) == k.samples[1]);
        CHECK(cli::parse({cmd, k.flag, k.samples[1], "--config", cfg}).values.at(k.key) == k.samples[1]);
      } else {
        REQUIRE(k.flag_value != k.def);
        const auto on = write_file("knob.cfg", k.key + " = " + k.flag_value + "\n");
        CHECK(cli::parse({cmd, "--config", on}).values.at(k.key) == k.flag_value);
        const auto off = write_file("knob.cfg", k.key + " = " + k.def + "\n");
        CHECK(cli::parse({cmd, "--config", off, k.flag}).values.at(k.key) == k.flag_value);
      }
    }
  }
}

TEST_CASE("knob registry is consistent") {
  std::set<std::string> keys;
  for (const auto& k : cli::knobs()) {
    CHECK(keys.insert(k.key).second);
    CHECK(k.flag.rfind("--", 0) == 0);
  }
  CHECK(cli::commands().size() == 8);
}

TEST_CASE("config files") {
  std::istringstream ok("seed = 9  # trailing\n\n  model=hybrid\n");
  const auto m = cli::parse_config(ok, "x.cfg");
  CHECK(m.at("seed") == "9");
  CHECK(m.at("model") == "hybrid");
  std::istringstream bad_key("seed = 1\nnope = 2\n");
  CHECK_THROWS_WITH_AS(cli::parse_config(bad_key, "x.cfg"), "x.cfg:2: unknown key 'nope'", cli::UsageError);
  std::istringstream bad_line("seed 1\n");
  CHECK_THROWS_AS(cli::parse_config(bad_line, "x.cfg"), cli::UsageError);
  CHECK_THROWS_AS(cli::read_config(tmp("missing.cfg").string()), cli::UsageError);
}

TEST_CASE("extract-epsilon golden output") {
  const auto r = run_cli({"extract-epsilon"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "r_ratio: 1.982378854625551e-03\n"
        "r_t: 2.973568281938326e-03\n"
        "apply_tau_factor: true\n"
        "epsilon_abs: 2.265041238769159e-03\n");
  const auto rec = run_cli({"extract-epsilon", "--format", "record", "--no-tau-factor"});
  CHECK(rec.out.rfind("epsilon ", 0) == 0);
  CHECK(rec.out.find("apply_tau_factor=false") != std::string::npos);
  CHECK(std::count(rec.out.begin(), rec.out.end(), '\n') == 1);
}

TEST_CASE("predict matches the library") {
  const KaonParams p;
  const auto state = cp_plus_state(k0_spinor(), p);
  const auto r = run_cli({"predict", "--model", "hybrid", "--bins", "5", "--t-max", "1e-9"});
  REQUIRE(r.code == 0);
  CHECK(r.err.empty());
  const auto v = rows(r.out);
  REQUIRE(v.size() == 5);
  CHECK(v[4].first == 1e-9);
  for (auto [t, x] : v) CHECK(x == Approx(pdf(DecayModel::Hybrid, state, t)).epsilon(1e-15));

  const auto s = rows(run_cli({"predict", "--quantity", "survival", "--bins", "4"}).out);
  CHECK(s[0].second == Approx(1.0));
  for (auto [t, x] : s) CHECK(x == Approx(survival(DecayModel::TimeOperator, state, t)).epsilon(1e-12));

  const auto in = rows(run_cli({"predict", "--quantity", "intensity", "--model", "twfo", "--bins", "3"}).out);
  for (auto [t, x] : in) CHECK(x == Approx(cronin_fitch_intensity(DecayModel::TimeOperator, p, t)).epsilon(1e-15));
  CHECK(run_cli({"predict", "--quantity", "intensity", "--state", "k1"}).code == 2);

  // a negative Standard pdf warns but still prints the curve
  const auto st = run_cli({"predict", "--model", "standard"});
  CHECK(st.code == 0);
  CHECK(st.err.rfind("warning[model-pathology]: ", 0) == 0);
  CHECK(rows(st.out).size() == 400);

  const auto j = run_cli({"predict", "--joint", "--joint-bins", "3", "--t-max", "1e-10"});
  REQUIRE(j.code == 0);
  CHECK(j.out.rfind("tl_s,tr_s,value\n", 0) == 0);
  CHECK(std::count(j.out.begin(), j.out.end(), '\n') == 10);
}

TEST_CASE("simulate, detect and fit chain") {
  const auto ev = run_cli({"simulate", "--model", "hybrid", "--n", "2000", "--seed", "42"});
  REQUIRE(ev.code == 0);
  const auto again = run_cli({"simulate", "--model", "hybrid", "--n", "2000", "--seed", "42"});
  CHECK(ev.out == again.out);  // byte-identical
  CHECK(run_cli({"simulate", "--model", "hybrid", "--n", "2000", "--seed", "43"}).out != ev.out);

  // --out writes exactly what stdout would have shown
  const auto out_path = tmp("events.csv");
  fs::remove(out_path);
  const auto w = run_cli({"simulate", "--model", "hybrid", "--n", "2000", "--seed", "42", "--out", out_path.string()});
  CHECK(w.code == 0);
  CHECK(w.out.empty());
  CHECK(slurp(out_path) == ev.out);

  std::istringstream in(ev.out);
  const auto events = read_events(in);
  CHECK(events.size() == 2000);

  const auto det = run_cli({"detect", "--events", out_path.string(), "--bins", "40", "--t-max", "2e-9",
                            "--branching-charged", "1"});
  REQUIRE(det.code == 0);
  CHECK(det.err.rfind("note: detected=", 0) == 0);
  const auto binned = write_file("binned.csv", det.out);
  std::istringstream bin_in(det.out);
  const auto b = read_binned(bin_in);
  double tot = 0;
  for (double c : b.pair) tot += c;
  CHECK(tot > 1900);

  const auto fit = run_cli({"fit", "--data", binned, "--model", "hybrid", "--free", "i0"});
  REQUIRE(fit.code == 0);
  CHECK(std::stod(field(fit.out, "i0")) > 0);

  const auto both = run_cli({"simulate", "--channels", "both", "--n", "500", "--epsilon-abs", "0"});
  CHECK(both.out.find(",triplet,") != std::string::npos);
  const auto pairs = run_cli({"simulate", "--joint", "--n", "10"});
  CHECK(pairs.code == 0);
  CHECK(pairs.out.find(",left,") != std::string::npos);
}

TEST_CASE("discriminate, zeno and spectrum wrappers") {
  const auto d = run_cli({"discriminate", "--trials", "100", "--null-toys", "100", "--n-events", "100", "--n-max",
                          "1000", "--format", "record"});
  REQUIRE(d.code == 0);
  CHECK(d.out.rfind("power model_a=twfo model_b=standard", 0) == 0);

  const auto z = run_cli({"zeno", "--epsilon-abs", "0", "--times", "1e-10,2e-10"});
  REQUIRE(z.code == 0);
  KaonParams p;
  p.epsilon = 0;
  const auto ref = zeno_sequence(k0_spinor(), p, {{1e-10, 2e-10}, 3 * p.tau_s()}, ZenoMode::analytic);
  CHECK(std::stod(field(z.out, "p_survival")) == Approx(ref.p_survival).epsilon(1e-15));
  const auto mc = run_cli({"zeno", "--epsilon-abs", "0", "--mode", "mc", "--trials", "2000"});
  CHECK(mc.out.find("se_plus: ") != std::string::npos);

  const auto sp = rows(run_cli({"spectrum", "--convention", "time_operator", "--bins", "3", "--t-max", "1e-10",
                                "--points", "1001"}).out);
  for (auto [t, x] : sp) CHECK(x == Approx(std::exp(-t / 8.92e-11)).epsilon(1e-14));
  const auto dens = run_cli({"spectrum", "--output", "density", "--points", "11"});
  CHECK(dens.out.rfind("e_per_s,density\n", 0) == 0);
  CHECK(std::count(dens.out.begin(), dens.out.end(), '\n') == 12);
}

TEST_CASE("exit codes and single-line errors") {
  auto r = run_cli({"predict", "--bins", "nope"});
  CHECK(r.code == 2);
  CHECK(one_error_line(r, "usage"));
  CHECK(r.out.empty());
  CHECK(run_cli({"predict", "--bogus"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"predict", "--model", "nope"}).code == 2);
  CHECK(run_cli({"predict", "--config", write_file("bad.cfg", "nope = 1\n")}).code == 2);
  r = run_cli({"discriminate", "--model-a", "hybrid", "--model-b", "hybrid"});
  CHECK(r.code == 2);
  CHECK(one_error_line(r, "usage"));
  CHECK(run_cli({"extract-epsilon", "--pairs", "0"}).code == 2);
  CHECK(run_cli({"simulate", "--out", tmp("no/such/dir/x.csv").string()}).code == 2);

  r = run_cli({"predict", "--model", "standard", "--strict-positivity"});
  CHECK(r.code == 3);
  CHECK(one_error_line(r, "model-pathology"));
  r = run_cli({"simulate", "--model", "standard"});
  CHECK(r.code == 3);
  CHECK(one_error_line(r, "model-pathology"));
  r = run_cli({"zeno"});
  CHECK(r.code == 3);
  CHECK(one_error_line(r, "unsupported-regime"));
  r = run_cli({"simulate", "--joint", "--epsilon-abs", "0", "--n", "5"});
  CHECK(r.code == 3);
  CHECK(one_error_line(r, "degenerate-state"));

  // an aborted fit exits 4 and reports where it stopped
  const auto ev = run_cli({"simulate", "--model", "hybrid", "--n", "5000", "--out", tmp("e4.csv").string()});
  REQUIRE(ev.code == 0);
  const auto det = run_cli({"detect", "--events", tmp("e4.csv").string(), "--bins", "30"});
  const auto data = write_file("b4.csv", det.out);
  r = run_cli({"fit", "--data", data, "--model", "hybrid", "--max-iterations", "2", "--starts", "1"});
  CHECK(r.code == 4);
  CHECK(one_error_line(r, "numerical"));
  CHECK(r.err.find("last: ") != std::string::npos);

  // failed commands never leave an output file behind
  const auto never = tmp("never.csv");
  fs::remove(never);
  CHECK(run_cli({"simulate", "--model", "standard", "--out", never.string()}).code == 3);
  CHECK_FALSE(fs::exists(never));
}

TEST_CASE("help exits cleanly") {
  const auto h = run_cli({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("predict") != std::string::npos);
  const auto hs = run_cli({"fit", "--help"});
  CHECK(hs.code == 0);
  CHECK(hs.out.find("--max-iterations") != std::string::npos);
}
