// rkform: tableau inspection and the 1D heat, wave, BBM and preconditioner
// studies. Every command prints CSV to stdout or writes it to --out; nothing
// is written when a solve fails.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "rkform/errors.hpp"
#include "rkform/experiments.hpp"

using namespace rkform;

namespace {

struct SchemeArgs {
  std::string family{"radau"};
  int stages{1};
  std::string named;

  ButcherTableau resolve() const {
    if (!named.empty()) return make_named(parse_named_scheme(named));
    return make_tableau(family, stages);
  }
};

void add_scheme_options(CLI::App* cmd, SchemeArgs& args) {
  cmd->add_option("--family", args.family, "gauss, radau, lobatto-iiia or lobatto-iiic")
      ->capture_default_str();
  cmd->add_option("--stages", args.stages, "Number of stages")->capture_default_str();
  cmd->add_option("--named", args.named,
                  "Named scheme: forward-euler, explicit-midpoint, rk4, ssp33, qin-zhang, "
                  "alexander-dirk2, alexander-dirk3");
}

void emit(const Csv& csv, const std::string& out) {
  if (out.empty()) {
    std::cout << csv.str() << std::flush;
  } else {
    csv.write_file(out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runge-Kutta stage-form experiments in one space dimension"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  app.add_option("--out", out, "Write the CSV here instead of stdout");

  std::function<Csv()> command;

  // tableau
  SchemeArgs tab;
  auto* tableau = app.add_subcommand("tableau", "Coefficients and properties of a tableau");
  add_scheme_options(tableau, tab);
  tableau->callback([&] { command = [&] { return tableau_report(tab.resolve()); }; });

  // heat
  SchemeArgs heat_scheme;
  heat_scheme.stages = 3;
  std::vector<int> heat_N{8, 16, 32, 64, 128};
  std::vector<double> heat_cfl{1.0, 4.0, 16.0};
  int heat_degree = 3;
  double heat_T = 2.0;
  std::string heat_pc = "direct";
  double rtol = 1e-8;
  double atol = 1e-10;
  auto* heat = app.add_subcommand(
      "heat", "Manufactured solution exp(-t) sin(pi x) on [0, 1]; relative errors at T");
  add_scheme_options(heat, heat_scheme);
  heat->add_option("--N", heat_N, "Cell counts")->capture_default_str();
  heat->add_option("--cfl", heat_cfl, "dt * N values")->capture_default_str();
  heat->add_option("--degree", heat_degree, "CG degree")->capture_default_str();
  heat->add_option("--T", heat_T, "Final time")->capture_default_str();
  heat->add_option("--pc", heat_pc, "direct, blockdiag, blocktri or none")->capture_default_str();
  heat->add_option("--rtol", rtol, "Linear and Newton relative tolerance")->capture_default_str();
  heat->add_option("--atol", atol, "Newton absolute tolerance")->capture_default_str();
  heat->callback([&] {
    command = [&] {
      SolverConfig solver = solver_config(parse_pc(heat_pc), rtol);
      solver.rtol = rtol;
      solver.atol = atol;
      return heat_study(heat_exact_solution(), heat_N, heat_degree, heat_scheme.resolve(), heat_cfl,
                        heat_T, solver);
    };
  });

  // wave
  std::vector<std::string> wave_schemes{"gauss:1",        "gauss:2",        "radau:1",
                                        "radau:2",        "lobatto-iiic:2", "lobatto-iiic:3",
                                        "qin-zhang"};
  std::vector<double> wave_dt{0.1, 0.5, 1.0};
  int wave_N = 10;
  int wave_degree = 2;
  double wave_T = 10.0;
  std::string wave_pc = "direct";
  auto* wave = app.add_subcommand(
      "wave", "Mixed wave system, sigma in CG(degree), u in DG(degree - 1); energy ratio at T");
  wave->add_option("--scheme", wave_schemes, "Schemes as name[:stages]")->capture_default_str();
  wave->add_option("--dt", wave_dt, "Time steps")->capture_default_str();
  wave->add_option("--N", wave_N, "Cell count")->capture_default_str();
  wave->add_option("--degree", wave_degree, "CG degree of sigma")->capture_default_str();
  wave->add_option("--T", wave_T, "Final time")->capture_default_str();
  wave->add_option("--pc", wave_pc, "direct, blockdiag, blocktri or none")->capture_default_str();
  wave->add_option("--rtol", rtol, "GMRES relative tolerance")->capture_default_str();
  wave->callback([&] {
    command = [&] {
      const PcChoice pc = parse_pc(wave_pc);
      Csv csv({"scheme", "dt", "energy_ratio", "max_gmres_iterations"});
      for (const auto& name : wave_schemes) {
        const ButcherTableau bt = parse_scheme(name);
        for (double dt : wave_dt) {
          const WaveRun r = run_wave(wave_N, wave_degree, bt, dt, wave_T, solver_config(pc, rtol));
          csv.add_row({bt.name(), dt, r.energy_ratio, long{r.max_linear_iterations}});
        }
      }
      return csv;
    };
  });

  // bbm
  BbmConfig bbm_config;
  int bbm_stages = 1;
  std::string field_out;
  auto* bbm = app.add_subcommand(
      "bbm", "BBM solitary wave on a periodic interval with Gauss-Legendre stepping");
  bbm->add_option("--N", bbm_config.N, "Cell count")->capture_default_str();
  bbm->add_option("--stages", bbm_stages, "Gauss-Legendre stages")->capture_default_str();
  bbm->add_option("--dt-factor", bbm_config.dt_factor, "dt = factor * h")->capture_default_str();
  bbm->add_option("--T", bbm_config.T, "Final time; reports at T/3, 2T/3 and T")
      ->capture_default_str();
  bbm->add_option("--rtol", bbm_config.solver.rtol, "Newton relative tolerance")
      ->capture_default_str();
  bbm->add_option("--atol", bbm_config.solver.atol, "Newton absolute tolerance")
      ->capture_default_str();
  bbm->add_option("--field-out", field_out, "Write the final field as x,value CSV");
  bbm->callback([&] {
    command = [&] {
      bbm_config.report_times = {bbm_config.T / 3.0, 2.0 * bbm_config.T / 3.0, bbm_config.T};
      const BbmRun run =
          run_bbm(bbm_config, make_collocation(CollocationFamily::GaussLegendre, bbm_stages));
      const BbmRecord& first = run.records.front();
      Csv csv({"t", "I1_ratio", "I2_ratio", "I3_ratio", "rel_l2", "max_newton_iterations"});
      for (const auto& r : run.records) {
        csv.add_row({r.t, r.I1 / first.I1, r.I2 / first.I2, r.I3 / first.I3, r.rel_l2,
                     long{r.newton_iterations}});
      }
      if (!field_out.empty()) {
        std::ofstream os(field_out);
        write_field_csv(os, *run.final_field);
        if (!os) throw Error("cannot write " + field_out);
      }
      return csv;
    };
  });

  // precond
  SchemeArgs pc_scheme;
  pc_scheme.stages = 2;
  std::vector<int> pc_N{64, 256, 1024};
  std::string pc_name = "blockdiag";
  double pc_cfl = 1.0;
  int pc_steps = 5;
  int pc_degree = 1;
  bool timing = false;
  auto* precond = app.add_subcommand(
      "precond", "GMRES iterations for the heat stage system under a block preconditioner");
  add_scheme_options(precond, pc_scheme);
  precond->add_option("--N", pc_N, "Cell counts")->capture_default_str();
  precond->add_option("--pc", pc_name, "blockdiag, blocktri, none or direct")->capture_default_str();
  precond->add_option("--cfl", pc_cfl, "dt * N")->capture_default_str();
  precond->add_option("--steps", pc_steps, "Steps per run")->capture_default_str();
  precond->add_option("--degree", pc_degree, "CG degree")->capture_default_str();
  precond->add_option("--rtol", rtol, "GMRES relative tolerance")->capture_default_str();
  precond->add_flag("--timing", timing, "Add a wall_time column (not reproducible)");
  precond->callback([&] {
    command = [&] {
      const ButcherTableau bt = pc_scheme.resolve();
      const PcChoice pc = parse_pc(pc_name);
      std::vector<std::string> header{"N", "stages", "avg_iterations", "max_iterations"};
      if (timing) header.push_back("wall_time");
      Csv csv(header);
      for (int N : pc_N) {
        const PrecondRun r = run_precond(N, pc_degree, bt, pc, pc_cfl, pc_steps, rtol);
        std::vector<CsvCell> row{long{r.N}, long{r.stages}, r.avg_iterations,
                                 long{r.max_iterations}};
        if (timing) row.emplace_back(r.wall_time);
        csv.add_row(row);
      }
      return csv;
    };
  });

  CLI11_PARSE(app, argc, argv);
  try {
    emit(command(), out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rkform: %s\n", e.what());
    return 1;
  }
  return 0;
}
