#pragma once

#include "pmod/catalog.hpp"
#include "pmod/quadrature.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmod::cli {

enum class Command { Compute, Verify, CrossValidate };

struct RunConfig {
  Command command = Command::Compute;
  std::string family;
  ParameterMap parameters;
  double p = 2.0;
  QuadratureScheme quadrature;
  std::vector<int> grid_ladder{16, 32, 64};
  std::string output_path;  // empty: standard output
  std::string format = "json";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericalError = 3 };

/// Parses "lo,hi;lo,hi;..." into a box.
BoxDomain parse_box(const std::string& text);

/// Builds a config from command-line arguments (argv[0] is the program name).
/// Throws ConfigError; returns nullopt when help was printed.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Reads a JSON config whose keys mirror RunConfig's fields.
RunConfig load_config(const std::string& path);

struct CheckResult {
  std::string name;
  bool passed;
  double value;      // measured statistic (worst case)
  double tolerance;  // pass threshold
};

/// The verification suite on a catalog entry: expected modulus, key relation,
/// route equivalence, admissibility, co-area, extremality and, when a
/// transverse family is known, the reciprocal identity.
std::vector<CheckResult> verify_entry(const CatalogEntry& entry, double p, const QuadratureScheme& quad,
                                      std::uint64_t seed, unsigned threads = 0);

/// Executes a run; writes the result file (or stdout) and one-line
/// diagnostics on `err`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses and runs; the CLI entry point.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmod::cli
