// Command-line driver: eigen / speed / steady / simulate / wave / verify / sweep.
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 property-suite (verify) failure.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nlkpp/runner.hpp"

namespace {

int dispatch(CLI::App& app, const std::string& config_path, const std::string& out_dir) {
  using namespace nlkpp;
  ProblemConfig cfg = parse_config(config_path);
  if (!out_dir.empty()) cfg.solver.out_dir = out_dir;
  Workbench wb(std::move(cfg));

  if (auto* c = app.get_subcommand("eigen"); c->parsed()) {
    const double mu = c->get_option("--mu")->as<double>();
    const int xi = c->get_option("--xi")->as<int>();
    const bool phi = c->get_option("--phi-csv")->as<bool>();
    const auto j = runner::run_eigen(wb, mu, xi, phi);
    std::cout << j.dump(2) << "\n";
  } else if (auto* c = app.get_subcommand("speed"); c->parsed()) {
    const auto j = runner::run_speed(wb, c->get_option("--xi")->as<int>());
    std::cout << j.dump(2) << "\n";
  } else if (auto* c = app.get_subcommand("steady"); c->parsed()) {
    const auto j = runner::run_steady(wb);
    std::cout << j.dump(2) << "\n";
  } else if (auto* c = app.get_subcommand("simulate"); c->parsed()) {
    const auto j = runner::run_simulate(wb, c->get_option("--scenario")->as<std::string>(),
                                        c->get_option("--xi")->as<int>());
    std::cout << j.dump(2) << "\n";
  } else if (auto* c = app.get_subcommand("wave"); c->parsed()) {
    const auto j = runner::run_wave_cmd(wb, c->get_option("--xi")->as<int>(),
                                        c->get_option("--speed-multiple")->as<double>());
    std::cout << j.dump(2) << "\n";
  } else if (auto* c = app.get_subcommand("verify"); c->parsed()) {
    const auto checks = runner::run_verify(wb);
    bool all = true;
    for (const auto& ck : checks) {
      std::printf("[%s] %-24s value=%.3e tol=%.3e\n", ck.pass ? "PASS" : "FAIL",
                  ck.name.c_str(), ck.value, ck.tol);
      all = all && ck.pass;
    }
    return all ? 0 : 3;
  } else if (auto* c = app.get_subcommand("sweep"); c->parsed()) {
    const auto j = runner::run_sweep(wb, c->get_option("--param")->as<std::string>(),
                                     c->get_option("--from")->as<double>(),
                                     c->get_option("--to")->as<double>(),
                                     c->get_option("--steps")->as<int>(),
                                     c->get_option("--xi")->as<int>());
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spreading speeds and periodic traveling waves for nonlocal "
               "dispersal equations in time-space periodic habitats"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  app.add_option("--config", config_path, "problem configuration file")
      ->required()
      ->envname("NLKPP_CONFIG");
  app.add_option("--out-dir", out_dir, "override the configured output directory");

  auto add_xi = [](CLI::App* c) {
    c->add_option("--xi", "direction (+1 or -1)")
        ->default_val(1)
        ->check(CLI::IsMember({1, -1}));
  };

  auto* eig = app.add_subcommand("eigen", "principal spectrum point and eigenfunction");
  eig->add_option("--mu", "exponential tilt rate")->default_val(0.0);
  add_xi(eig);
  eig->add_flag("--phi-csv", "dump the eigenfunction as CSV");

  auto* spd = app.add_subcommand("speed", "variational spreading speed c*(xi)");
  add_xi(spd);

  app.add_subcommand("steady", "positive time-space periodic state u*");

  auto* sim = app.add_subcommand("simulate", "front simulation on the truncated line");
  sim->add_option("--scenario", "speed | spread | compare")->default_val("speed");
  add_xi(sim);

  auto* wav = app.add_subcommand("wave", "periodic traveling wave by monotone iteration");
  add_xi(wav);
  wav->add_option("--speed-multiple", "wave speed as a multiple of c*")->default_val(1.5);

  app.add_subcommand("verify", "run the property suite; nonzero exit on failure");

  auto* swp = app.add_subcommand("sweep", "iterate the speed machinery over a grid");
  swp->add_option("--param", "mu | amplitude")->default_val("mu");
  swp->add_option("--from")->default_val(0.1);
  swp->add_option("--to")->default_val(2.0);
  swp->add_option("--steps")->default_val(16);
  add_xi(swp);

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app, config_path, out_dir);
  } catch (const nlkpp::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlkpp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
