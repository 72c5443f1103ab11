#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kaonlab::cli {

// One tunable: config key, command-line flag, built-in default.
struct Knob {
  std::string key;                    // config-file name, e.g. kaon.gamma_s
  std::string flag;                   // e.g. --gamma-s
  std::string def;                    // default, as text
  std::string help;
  std::vector<std::string> commands;  // empty: global
  std::string flag_value;             // non-empty: a switch that sets this value
  std::vector<std::string> samples;   // two valid non-default values (tests)
};

const std::vector<Knob>& knobs();
const std::vector<std::string>& commands();

// Resolved settings for one invocation: flag > config file > default.
struct Invocation {
  std::string command;
  std::map<std::string, std::string> values;
};

// Parses argv (without the program name). Throws UsageError.
Invocation parse(const std::vector<std::string>& args);

// Flat `key = value` file, `#` comments.
std::map<std::string, std::string> read_config(const std::string& path);
std::map<std::string, std::string> parse_config(std::istream& in, const std::string& origin);

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Full run: returns the process exit code (0 ok, 2 usage, 3 model
// pathology, 4 numerical failure). Errors go to `err` as one line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kaonlab::cli
