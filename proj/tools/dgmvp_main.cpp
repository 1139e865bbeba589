#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dgmvp/encoding.hpp"
#include "dgmvp/experiments.hpp"
#include "dgmvp/metrics.hpp"
#include "dgmvp/pauli.hpp"

namespace {

int cmd_run(const std::string& preset, const std::string& config_path, std::uint64_t seed,
            const std::string& out_dir) {
  dgmvp::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open config " << config_path << "\n";
      return 2;
    }
    cfg = dgmvp::config_from_json(nlohmann::json::parse(in));
    if (!preset.empty()) cfg.preset = preset;
  } else {
    cfg = dgmvp::default_config(preset);
  }
  const auto outcome = dgmvp::run_preset(cfg, seed, out_dir);
  std::cout << "preset " << cfg.preset << ": " << outcome.records.size() << " records -> "
            << outcome.records_csv.string() << "\n";
  if (cfg.preset == "identity-verification" && !outcome.all_checks_pass) {
    std::cerr << "identity checks FAILED\n";
    return 1;
  }
  return 0;
}

int cmd_verify_identities(const std::string& json_out) {
  std::vector<double> betas;
  dgmvp::Rng rng(20240901);
  for (int i = 0; i < 10; ++i) betas.push_back(rng.next_double() * 2.0 * M_PI);

  auto checks = dgmvp::verify_product_identities();
  const auto closed = dgmvp::verify_three_excitation_closed_form(betas);
  const auto two = dgmvp::verify_two_qubit_bridges(betas);
  checks.insert(checks.end(), closed.begin(), closed.end());
  checks.insert(checks.end(), two.begin(), two.end());
  const auto bridges = dgmvp::verify_three_qubit_bridges(betas);

  const auto report = dgmvp::identity_report_to_json(checks, bridges);
  if (!json_out.empty())
    std::ofstream(json_out) << report.dump(2) << "\n";
  else
    std::cout << report.dump(2) << "\n";
  for (const auto& c : report.at("checks")) {
    if (!c.at("pass").get<bool>())
      std::cerr << "FAIL " << c.at("identity").get<std::string>() << " max_error "
                << c.at("max_error").get<double>() << "\n";
  }
  return report.at("all_pass").get<bool>() ? 0 : 1;
}

int cmd_enumerate(int n, int l, bool list) {
  const dgmvp::EncodingSpec spec(n, l);
  nlohmann::json j;
  j["n"] = n;
  j["l"] = l;
  j["unit_lot"] = spec.unit_lot().str();
  j["qubits"] = spec.qubits();
  j["feasible"] = dgmvp::feasible_count(n, l);
  j["unconstrained"] = dgmvp::unconstrained_count(n, l);
  std::cout << j.dump(2) << "\n";
  if (list) {
    dgmvp::FeasibleEnumerator it(spec);
    std::uint64_t state;
    while (it.next(state)) std::cout << dgmvp::BitString(state, spec.qubits()).str() << "\n";
  }
  return 0;
}

int cmd_fit(const std::string& csv_path, int x_col, int y_col) {
  std::ifstream in(csv_path);
  if (!in) {
    std::cerr << "cannot open " << csv_path << "\n";
    return 2;
  }
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<double, double>> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) <= std::max(x_col, y_col)) continue;
    try {
      pts.emplace_back(std::stod(cells[x_col]), std::stod(cells[y_col]));
    } catch (const std::exception&) {
      continue;
    }
  }
  const auto fit = dgmvp::fit_power_law(pts);
  nlohmann::json j{{"points", pts.size()}, {"a", fit.a}, {"b", fit.b}, {"b_stderr", fit.b_stderr}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DGMVP QAOA toolkit: encoding, simulation, optimization and experiment drivers"};
  app.require_subcommand(1);

  std::string preset, config_path, out_dir = "out";
  std::uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "run an experiment preset");
  run->add_option("preset", preset, "preset name")
      ->check(CLI::IsMember(dgmvp::known_presets()))
      ->required(false);
  run->add_option("--config", config_path, "JSON config file (overrides preset defaults)");
  run->add_option("--seed", seed, "root seed");
  run->add_option("--out", out_dir, "output directory");

  std::string identities_json;
  auto* verify = app.add_subcommand("verify-identities", "check the excitation-algebra identities");
  verify->add_option("--json", identities_json, "write the report to this file");

  int n = 2, l = 2;
  bool list = false;
  auto* enumerate = app.add_subcommand("enumerate", "feasible-region counting and listing");
  enumerate->add_option("--n", n, "asset count")->required();
  enumerate->add_option("--l", l, "bits per asset")->required();
  enumerate->add_flag("--list", list, "print every feasible bit string");

  std::string fit_csv;
  int x_col = 0, y_col = 1;
  auto* fit = app.add_subcommand("fit", "power-law fit of CSV points");
  fit->add_option("--in", fit_csv, "input CSV")->required();
  fit->add_option("--x-col", x_col, "0-based x column");
  fit->add_option("--y-col", y_col, "0-based y column");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (preset.empty() && config_path.empty()) {
        std::cerr << "run: need a preset name or --config\n";
        return 2;
      }
      return cmd_run(preset, config_path, seed, out_dir);
    }
    if (verify->parsed()) return cmd_verify_identities(identities_json);
    if (enumerate->parsed()) return cmd_enumerate(n, l, list);
    if (fit->parsed()) return cmd_fit(fit_csv, x_col, y_col);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
