#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rkform/csv.hpp"
#include "rkform/fem.hpp"
#include "rkform/stepper.hpp"
#include "rkform/tableau.hpp"

namespace rkform {

/// "gauss:2", "radau:3", "lobatto-iiic:2", "qin-zhang", ... The stage count
/// defaults to 1 when omitted.
ButcherTableau parse_scheme(const std::string& text);

/// Declared order and stage order of a tableau by name, A, b, c and class,
/// order-condition residuals, R(inf) and the symplecticity residual as
/// rows of (quantity, i, j, value).
Csv tableau_report(const ButcherTableau& t);

// Heat equation u_t = u_xx + f on [0, 1] with Dirichlet data taken from a
// manufactured solution.

/// exp(-t) sin(pi x)
Expr heat_exact_solution();

/// (Dt u, v) + (u_x, v_x) - (f, v) with f = u_t - u_xx of `exact`.
Form heat_form(const Expr& exact);

struct HeatRun {
  int N{0};
  double cfl{0.0};
  double dt{0.0};
  int steps{0};
  double l2{0.0};  // relative
  double h1{0.0};  // relative
  double bc_drift{0.0};
  double avg_linear_iterations{0.0};
};

HeatRun run_heat(const Expr& exact, int N, int degree, const ButcherTableau& tableau, double dt,
                 double T, const SolverConfig& solver = {});

/// Rows N,cfl,dt,l2,h1,bc_drift; dt = cfl / N.
Csv heat_study(const Expr& exact, const std::vector<int>& Ns, int degree,
               const ButcherTableau& tableau, const std::vector<double>& cfls, double T,
               const SolverConfig& solver = {});

/// Least-squares slope of log(err) against log(h) over consecutive entries.
double observed_order(const std::vector<double>& h, const std::vector<double>& err);

// Mixed wave system u_t + sigma_x = 0, sigma_t + u_x = 0 on [0, 1]; u in
// DG P(k-1), sigma in CG P(k), u = 0 imposed weakly.

Form wave_form();

struct WaveRun {
  double dt{0.0};
  double energy_ratio{0.0};
  int steps{0};
  int max_linear_iterations{0};
  double avg_linear_iterations{0.0};
  Vector final_state;
};

WaveRun run_wave(int N, int degree, const ButcherTableau& tableau, double dt, double T,
                 const SolverConfig& solver = {});

// BBM u_t + u_x + u u_x - u_txx = 0, periodic.

struct BbmConfig {
  int N{1000};
  double length{100.0};
  double c{0.5};
  double peak{40.0};
  double dt_factor{1.0};  // dt = dt_factor * h
  double T{18.0};
  std::vector<double> report_times{6.0, 12.0, 18.0};
  SolverConfig solver{};
};

Form bbm_form();
/// Solitary wave profile at time t, summed over the neighbouring periods.
Expr bbm_solution(const BbmConfig& config, double t);

struct BbmRecord {
  double t{0.0};
  double I1{0.0};
  double I2{0.0};
  double I3{0.0};
  double rel_l2{0.0};
  int newton_iterations{0};  // maximum over the steps since the previous record
};

struct BbmRun {
  std::vector<BbmRecord> records;  // t = 0 first, then each report time
  std::optional<FieldFunction> final_field;
  int max_newton_iterations{0};
};

BbmRun run_bbm(const BbmConfig& config, const ButcherTableau& tableau);

/// I1 = int u, I2 = int u^2 + u_x^2, I3 = int u_x^2 + u^3 / 3.
std::vector<Expr> bbm_invariants();

// Preconditioner study on the heat equation (CG P(degree)).

enum class PcChoice { BlockDiagonal, BlockLowerTriangular, None, Direct };
PcChoice parse_pc(const std::string& name);
std::string to_string(PcChoice pc);
/// Direct LU, or GMRES with the chosen block preconditioner.
SolverConfig solver_config(PcChoice pc, double rtol = 1e-8);

struct PrecondRun {
  int N{0};
  int stages{0};
  double avg_iterations{0.0};
  int max_iterations{0};
  double wall_time{0.0};
};

PrecondRun run_precond(int N, int degree, const ButcherTableau& tableau, PcChoice pc, double cfl,
                       int steps, double rtol = 1e-8);

}  // namespace rkform
