// SPDX-License-Identifier: MIT
#include <implicit_pde/implicit_pde.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace implicit_pde;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(std::nullopt, "output", "cannot write '" + path + "'");
  out << text;
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void print_summary(const Report& r, std::ostream& out) {
  for (const auto& f : r.families) {
    out << "family " << f.index << " " << (f.name.empty() ? f.kind : f.name) << " [" << f.kind
        << "] points=" << f.points.size() << " failed=" << f.failed_points();
    if (!f.coverage_ok()) out << " SolverCoverage";
    out << (f.pass() ? " PASS" : " FAIL") << "\n";
    if (f.checks.empty()) out << "  (no checks expected)\n";
    for (const auto& c : f.checks) {
      const auto& rep = c.report;
      out << "  " << rep.check << " max=" << format_number(rep.max_normalized())
          << " tol=" << format_number(rep.tolerance) << " evaluated=" << rep.evaluated()
          << " errors=" << rep.errors() << (c.pass() ? " PASS" : " FAIL") << "\n";
    }
  }
  out << "overall " << (r.pass() ? "PASS" : "FAIL") << "\n";
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ConfigError(std::nullopt, "n", "expected a comma list of dimensions, got '" + text + "'");
    }
  }
  if (dims.empty()) throw ConfigError(std::nullopt, "n", "no dimensions given");
  return dims;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checks implicitly defined fields against nonlinear PDE residuals"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string scenario_path;
  std::string json_path;
  std::string csv_path;
  std::string format = "json";
  std::string out_path;
  std::string dims = "2,3,4,5";
  int trials = 100;
  std::uint64_t seed = 0;

  auto* verify = app.add_subcommand("verify", "run the scenario's checks and print a summary");
  verify->add_option("scenario", scenario_path, "scenario file")->required();
  verify->add_option("--json", json_path, "write the JSON report here");
  verify->add_option("--csv", csv_path, "write per-point residuals here");

  auto* sample_cmd = app.add_subcommand("sample", "solve the sample points and dump their jets as CSV");
  sample_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  sample_cmd->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* report = app.add_subcommand("report", "run the checks and write the report to stdout");
  report->add_option("scenario", scenario_path, "scenario file")->required();
  report->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* fuzz = app.add_subcommand("fuzz-identity", "fuzz the bordered determinant identity on random jets");
  fuzz->add_option("--n", dims, "comma list of dimensions in 2..6");
  fuzz->add_option("--trials", trials, "random jets per dimension")->check(CLI::NonNegativeNumber);
  fuzz->add_option("--seed", seed, "seed");
  fuzz->add_option("--json", json_path, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*fuzz) {
      const FuzzReport r = fuzz_identity(parse_dims(dims), trials, seed);
      for (const auto& e : r.entries) {
        std::cout << "n=" << e.n << " trials=" << e.trials << " worst=" << format_number(e.worst) << " signs=";
        bool first = true;
        for (int s : e.signs) {
          std::cout << (first ? "" : ",") << s;
          first = false;
        }
        std::cout << (e.pass() ? " PASS" : " FAIL") << "\n";
      }
      std::cout << "overall " << (r.pass() ? "PASS" : "FAIL") << "\n";
      if (!json_path.empty()) write_file(json_path, json_text(to_json(r)));
      return r.pass() ? kExitPass : kExitFail;
    }

    const ScenarioConfig cfg = load_scenario(scenario_path);
    if (*sample_cmd) {
      const std::string csv = samples_to_csv(cfg);
      if (out_path.empty())
        std::cout << csv;
      else
        write_file(out_path, csv);
      return kExitPass;
    }

    const Report r = run_checks(cfg);
    if (*report) {
      std::cout << (format == "csv" ? to_csv(r) : json_text(to_json(r)));
      return r.pass() ? kExitPass : kExitFail;
    }

    print_summary(r, std::cout);
    if (json_path.empty()) json_path = cfg.json_path;
    if (csv_path.empty()) csv_path = cfg.csv_path;
    if (!json_path.empty()) write_file(json_path, json_text(to_json(r)));
    if (!csv_path.empty()) write_file(csv_path, to_csv(r));
    return r.pass() ? kExitPass : kExitFail;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
