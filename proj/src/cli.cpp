#include "pmod/cli.hpp"

#include "pmod/errors.hpp"
#include "pmod/modulus.hpp"
#include "pmod/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace pmod::cli {

using Json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();  // getline drops a trailing empty field
  return parts;
}

double parse_real(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::logic_error&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("not a number: '" + text + "'");
  return value;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_real(part));
  return values;
}

const char* command_name(Command command) {
  switch (command) {
    case Command::Compute:
      return "compute";
    case Command::Verify:
      return "verify";
    case Command::CrossValidate:
      return "cross-validate";
  }
  return "";
}

Command parse_command(const std::string& text) {
  if (text == "compute") return Command::Compute;
  if (text == "verify") return Command::Verify;
  if (text == "cross-validate") return Command::CrossValidate;
  throw ConfigError("unknown command '" + text + "'");
}

QuadratureKind parse_kind(const std::string& text) {
  if (text == "gauss" || text == "gauss-legendre") return QuadratureKind::GaussLegendre;
  if (text == "midpoint") return QuadratureKind::Midpoint;
  throw ConfigError("unknown quadrature kind '" + text + "'");
}

void put_box(ParameterMap& params, const std::string& prefix, const BoxDomain& box) {
  for (int i = 0; i < box.dim(); ++i) {
    params[prefix + std::to_string(i) + "_lo"] = box.lower()[i];
    params[prefix + std::to_string(i) + "_hi"] = box.upper()[i];
  }
}

int box_dim(const ParameterMap& params, const std::string& prefix) {
  int dim = 0;
  while (params.count(prefix + std::to_string(dim) + "_lo")) ++dim;
  return std::max(dim, 1);
}

Vector random_point(const BoxDomain& box, std::mt19937_64& rng) {
  Vector point(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    std::uniform_real_distribution<double> dist(box.lower()[i], box.upper()[i]);
    point[i] = dist(rng);
  }
  return point;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

void RunConfig::validate() const {
  if (family.empty()) throw ConfigError("no family given");
  const auto names = catalog_names();
  if (std::find(names.begin(), names.end(), family) == names.end())
    throw ConfigError("unknown family '" + family + "'");
  if (!std::isfinite(p) || !(p > kMinExponent)) throw ConfigError("p must be > 1");
  if (quadrature.order < 1 || quadrature.subdivisions < 1)
    throw ConfigError("quadrature order and subdivisions must be positive");
  if (grid_ladder.empty()) throw ConfigError("grid ladder is empty");
  for (int cells : grid_ladder)
    if (cells < 2) throw ConfigError("grid resolutions must be >= 2");
  if (format != "json" && format != "csv") throw ConfigError("format must be json or csv");
}

BoxDomain parse_box(const std::string& text) {
  const auto axes = split(text, ';');
  if (axes.empty()) throw ConfigError("empty box");
  Vector lo(static_cast<Eigen::Index>(axes.size())), hi(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto bounds = parse_reals(axes[i]);
    if (bounds.size() != 2) throw ConfigError("box axis '" + axes[i] + "' must be lower,upper");
    lo[static_cast<Eigen::Index>(i)] = bounds[0];
    hi[static_cast<Eigen::Index>(i)] = bounds[1];
  }
  try {
    return BoxDomain(lo, hi);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  RunConfig config;
  try {
    if (doc.contains("command")) config.command = parse_command(doc.at("command").get<std::string>());
    if (doc.contains("family")) config.family = doc.at("family").get<std::string>();
    if (doc.contains("parameters"))
      for (const auto& [key, value] : doc.at("parameters").items()) config.parameters[key] = value.get<double>();
    if (doc.contains("p")) config.p = doc.at("p").get<double>();
    if (doc.contains("quadrature")) {
      const auto& quad = doc.at("quadrature");
      if (quad.contains("order")) config.quadrature.order = quad.at("order").get<int>();
      if (quad.contains("subdivisions")) config.quadrature.subdivisions = quad.at("subdivisions").get<int>();
      if (quad.contains("kind")) config.quadrature.kind = parse_kind(quad.at("kind").get<std::string>());
    }
    if (doc.contains("oracle") && doc.at("oracle").contains("grid"))
      config.grid_ladder = doc.at("oracle").at("grid").get<std::vector<int>>();
    if (doc.contains("output")) {
      const auto& output = doc.at("output");
      if (output.contains("path")) config.output_path = output.at("path").get<std::string>();
      if (output.contains("format")) config.format = output.at("format").get<std::string>();
    }
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("threads")) config.threads = doc.at("threads").get<unsigned>();
  } catch (const Json::exception& e) {
    throw ConfigError("bad config field: " + std::string(e.what()));
  }
  return config;
}

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"p-modulus of parametrized surface families"};
  std::string command, config_path, family, u_text, v_text, b_text, d_text, grid_text, kind_text, format;
  std::string output_path;
  std::vector<std::string> extra;
  double p = 2.0, r0 = 0.0, r1 = 0.0;
  int order = 0, subdivisions = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  app.add_option("command", command, "compute | verify | cross-validate (optional with --config)");
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--family", family, "catalog family name");
  app.add_option("--u", u_text, "box U as lo,hi;lo,hi;...");
  app.add_option("--v", v_text, "box V as lo,hi;lo,hi;...");
  app.add_option("--b", b_text, "shear matrix entries (row-major) or pq-map scale");
  app.add_option("--d", d_text, "diagonal of the condenser's linear map");
  app.add_option("--r0", r0, "inner annulus radius");
  app.add_option("--r1", r1, "outer annulus radius");
  app.add_option("--param", extra, "extra parameter key=value");
  app.add_option("--p", p, "exponent p > 1");
  app.add_option("--order", order, "quadrature points per axis per cell");
  app.add_option("--subdivisions", subdivisions, "quadrature cells per axis");
  app.add_option("--quadrature", kind_text, "gauss | midpoint");
  app.add_option("--grid", grid_text, "oracle grid ladder, e.g. 16,32,64");
  app.add_option("--seed", seed, "random seed for probes");
  app.add_option("--threads", threads, "worker thread cap (0: all)");
  app.add_option("--output", output_path, "output file (default: stdout)");
  app.add_option("--format", format, "json | csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
  if (!command.empty())
    config.command = parse_command(command);
  else if (config_path.empty())
    throw ConfigError("command is required");
  if (app.count("--family")) config.family = family;
  if (app.count("--p")) config.p = p;
  if (app.count("--order")) config.quadrature.order = order;
  if (app.count("--subdivisions")) config.quadrature.subdivisions = subdivisions;
  if (app.count("--quadrature")) config.quadrature.kind = parse_kind(kind_text);
  if (app.count("--seed")) config.seed = seed;
  if (app.count("--threads")) config.threads = threads;
  if (app.count("--output")) config.output_path = output_path;
  if (app.count("--format")) config.format = format;
  if (app.count("--grid")) {
    config.grid_ladder.clear();
    for (double cells : parse_reals(grid_text)) config.grid_ladder.push_back(static_cast<int>(cells));
  }

  auto& params = config.parameters;
  if (app.count("--u")) put_box(params, "u", parse_box(u_text));
  if (app.count("--v")) put_box(params, "v", parse_box(v_text));
  if (app.count("--r0")) params["r0"] = r0;
  if (app.count("--r1")) params["r1"] = r1;
  if (app.count("--d")) {
    const auto diag = parse_reals(d_text);
    for (std::size_t i = 0; i < diag.size(); ++i) params["d" + std::to_string(i)] = diag[i];
  }
  if (app.count("--b")) {
    const auto values = parse_reals(b_text);
    if (config.family == "shear") {
      const int rows = box_dim(params, "u"), cols = box_dim(params, "v");
      if (values.size() != static_cast<std::size_t>(rows * cols))
        throw ConfigError("--b needs " + std::to_string(rows * cols) + " entries for a " + std::to_string(rows) +
                          "x" + std::to_string(cols) + " shear");
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          params["b" + std::to_string(i) + "_" + std::to_string(j)] = values[static_cast<std::size_t>(i * cols + j)];
    } else {
      if (values.size() != 1) throw ConfigError("--b expects a single value for family '" + config.family + "'");
      params["b"] = values[0];
    }
  }
  for (const auto& item : extra) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + item + "'");
    params[item.substr(0, eq)] = parse_real(item.substr(eq + 1));
  }
  return config;
}

std::vector<CheckResult> verify_entry(const CatalogEntry& entry, double p, const QuadratureScheme& quad,
                                      std::uint64_t seed, unsigned threads) {
  std::vector<CheckResult> checks;
  std::mt19937_64 rng(seed);
  const auto& fam = entry.family;
  const ModulusOptions options{threads, false};
  const ModulusReport report = modulus_p(fam, p, quad, options);

  const double expected = entry.expected_modulus(p);
  const double expected_error = std::abs(report.modulus - expected) / expected;
  checks.push_back({"expected_modulus", expected_error <= 1e-7, expected_error, 1e-7});

  if (entry.submersion) {
    const auto& sub = *entry.submersion;
    const bool analytic = fam.has_analytic_jacobian() && sub.has_analytic_jacobian();
    const double tol = analytic ? 1e-8 : 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vector x = random_point(fam.u(), rng);
      const Vector y = random_point(fam.v(), rng);
      worst = std::max(worst, key_relation_residual(fam, sub, x, y));
    }
    checks.push_back({"key_relation", worst <= tol, worst, tol});

    const double route = relative(report.modulus, submersion_modulus(sub, fam, p, quad, options).modulus);
    checks.push_back({"route_equivalence", route <= 1e-7, route, 1e-7});

    // Three integrands: constant, radial quadratic and a seeded random quadratic.
    const int n = fam.n();
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    Vector linear(n);
    Matrix quadratic(n, n);
    for (int i = 0; i < n; ++i) linear[i] = coef(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) quadratic(i, j) = coef(rng);
    const std::vector<ScalarField> integrands{
        [](const Vector&) { return 1.0; },
        [](const Vector& z) { return 1.0 + z.squaredNorm(); },
        [linear, quadratic](const Vector& z) { return 2.0 + linear.dot(z) + z.dot(quadratic * z); },
    };
    double coarea_worst = 0.0;
    for (const auto& g : integrands) {
      const auto result = coarea_check(fam, sub, g, quad, threads);
      coarea_worst = std::max(coarea_worst, relative(result.lhs, result.rhs));
    }
    checks.push_back({"coarea", coarea_worst <= 1e-8, coarea_worst, 1e-8});
  }

  const ExtremalDensity density(fam, p, quad);
  std::vector<Vector> xs;
  for (int i = 0; i < 32; ++i) xs.push_back(random_point(fam.u(), rng));
  double admissibility_worst = 0.0;
  for (const auto& sample : admissibility_check(fam, density, quad, xs))
    admissibility_worst = std::max(admissibility_worst, std::abs(sample.integral - 1.0));
  checks.push_back({"admissibility", admissibility_worst <= 1e-6, admissibility_worst, 1e-6});

  const double gap = extremality_probe(fam, p, quad, 50, rng(), {0.3, 2, threads});
  checks.push_back({"extremality", gap >= -1e-9, gap, -1e-9});

  if (entry.transverse) {
    const double q = conjugate_exponent(p);
    const double transverse = modulus_p(*entry.transverse, q, quad, options).modulus;
    const double product = std::pow(report.modulus, 1.0 / p) * std::pow(transverse, 1.0 / q);
    const double defect = std::abs(product - 1.0);
    checks.push_back({"reciprocal_identity", defect <= 1e-8, defect, 1e-8});
  }
  return checks;
}

namespace {

Json result_document(const RunConfig& config, const CatalogEntry& entry, const ModulusReport& report) {
  const double expected = entry.expected_modulus(config.p);
  Json params = Json::object();
  for (const auto& [key, value] : entry.parameters) params[key] = value;
  Json samples = Json::array();
  for (const auto& sample : report.l_samples) {
    Json x = Json::array();
    for (Eigen::Index i = 0; i < sample.x.size(); ++i) x.push_back(sample.x[i]);
    samples.push_back(Json{{"x", x}, {"l", sample.l}});
  }
  Json diagnostics = {
      {"command", command_name(config.command)},
      {"min_jacobian", report.min_jacobian},
      {"node_count", report.node_count},
      {"quadrature",
       {{"order", config.quadrature.order},
        {"subdivisions", config.quadrature.subdivisions},
        {"kind", config.quadrature.kind == QuadratureKind::GaussLegendre ? "gauss" : "midpoint"}}},
  };
  if (report.quadrature_error) diagnostics["quadrature_error"] = *report.quadrature_error;
  return Json{{"family", entry.name},
              {"parameters", params},
              {"p", report.p},
              {"q", report.q},
              {"modulus", report.modulus},
              {"expected_modulus", expected},
              {"relative_error", std::abs(report.modulus - expected) / expected},
              {"l_samples", samples},
              {"diagnostics", diagnostics},
              {"seed", config.seed}};
}

void write_csv(std::ostream& out, const ModulusReport& report) {
  const auto precision = out.precision(17);
  const Eigen::Index dim = report.l_samples.empty() ? 0 : report.l_samples.front().x.size();
  for (Eigen::Index i = 0; i < dim; ++i) out << 'x' << i << ',';
  out << "l\n";
  for (const auto& sample : report.l_samples) {
    for (Eigen::Index i = 0; i < dim; ++i) out << sample.x[i] << ',';
    out << sample.l << '\n';
  }
  out.precision(precision);
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const CatalogEntry entry = make_entry(config.family, config.parameters, config.p);
    const ModulusReport report = modulus_p(entry.family, config.p, config.quadrature, {config.threads, true});
    Json doc = result_document(config, entry, report);
    bool passed = true;

    if (config.command == Command::Verify) {
      Json checks = Json::array();
      for (const auto& check : verify_entry(entry, config.p, config.quadrature, config.seed, config.threads)) {
        checks.push_back(
            {{"name", check.name}, {"passed", check.passed}, {"value", check.value}, {"tolerance", check.tolerance}});
        if (!check.passed) {
          passed = false;
          err << "check failed: " << check.name << " value=" << check.value << " tolerance=" << check.tolerance
              << '\n';
        }
      }
      doc["diagnostics"]["checks"] = checks;
    } else if (config.command == Command::CrossValidate) {
      CrossValidateOptions options;
      options.threads = config.threads;
      const auto table = cross_validate(entry.family, config.p, report, config.grid_ladder, options);
      Json rows = Json::array();
      for (const auto& row : table)
        rows.push_back({{"cells_per_axis", row.cells_per_axis},
                        {"discrete_modulus", row.discrete_modulus},
                        {"relative_gap", row.relative_gap},
                        {"iterations", row.iterations}});
      doc["diagnostics"]["convergence"] = rows;
      if (!(table.back().relative_gap <= 0.05)) {
        passed = false;
        err << "check failed: oracle gap " << table.back().relative_gap << " exceeds 0.05\n";
      }
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (!config.output_path.empty()) {
      file.open(config.output_path);
      if (!file) throw ConfigError("cannot write '" + config.output_path + "'");
      sink = &file;
    }
    if (config.format == "csv")
      write_csv(*sink, report);
    else
      *sink << doc.dump(2) << '\n';
    return passed ? kOk : kCheckFailed;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_args(argc, argv, out);
    if (!config) return kOk;
    return run(*config, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace pmod::cli
