// Command-line front end: simulate, sweep, subordinate, audit, figure.
// Reports go to stdout, timings to stderr. Exit 0 pass, 2 monitor/threshold failure, 1 usage/config error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "opdyn/error.hpp"
#include "opdyn/harness.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kUsage = 1;
constexpr int kFail = 2;

struct Common {
  std::string scenario;
  double dt = 0.0;
  long grid = 0;
  bool seedless = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sub->add_option("--dt", c.dt, "time step (default: the scenario's dt)")->check(CLI::PositiveNumber);
  sub->add_option("--grid", c.grid, "cells for graph-limit / PDE runs")->check(CLI::PositiveNumber);
  sub->add_flag("--seedless", c.seedless, "assert that no random numbers are used (all runs are deterministic)");
}

class Timer {
 public:
  explicit Timer(std::string label) : label_(std::move(label)), t0_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::fprintf(stderr, "[time] %s %.3f s\n", label_.c_str(), s);
  }

 private:
  std::string label_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opinion dynamics with time-varying weights: agents, graph limit and mean-field PDE"};
  app.require_subcommand(1);

  Common common;
  std::string level = "micro";
  std::string out_dir;
  std::vector<long> n_list;
  int trials = 20;
  std::string figure;

  auto* sim = app.add_subcommand("simulate", "single run at one level");
  add_common(sim, common);
  sim->add_option("--level", level, "micro | graph | pde")->check(CLI::IsMember({"micro", "graph", "pde"}));
  sim->add_option("--out", out_dir, "directory for the CSV output");

  auto* sweep = app.add_subcommand("sweep", "agent-to-graph-limit convergence sweep");
  add_common(sweep, common);
  sweep->add_option("--n", n_list, "comma-separated agent counts")->delimiter(',');

  auto* sub = app.add_subcommand("subordinate", "agent / graph-limit / mean-field consistency check");
  add_common(sub, common);
  sub->add_option("--n", n_list, "comma-separated agent counts")->delimiter(',');

  auto* audit = app.add_subcommand("audit", "indistinguishability audit");
  add_common(audit, common);
  audit->add_option("--trials", trials, "number of trials")->check(CLI::NonNegativeNumber);

  auto* fig = app.add_subcommand("figure", "write the data behind one figure");
  add_common(fig, common);
  fig->add_option("--id", figure, "fig3 .. fig8")->required();
  fig->add_option("--out", out_dir, "output directory (default: current directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const opdyn::Scenario sc = opdyn::load_scenario(common.scenario);
    std::vector<opdyn::Index> ns(n_list.begin(), n_list.end());

    if (sim->parsed()) {
      Timer timer("simulate " + level);
      opdyn::SimulateOptions o;
      o.dt = common.dt;
      o.grid = common.grid;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        o.out_dir = out_dir;
      }
      const opdyn::Level lv = level == "graph" ? opdyn::Level::graph
                              : level == "pde" ? opdyn::Level::pde
                                               : opdyn::Level::micro;
      const auto summary = opdyn::simulate(sc, lv, o);
      for (const auto& l : summary.lines) std::cout << l << '\n';
      for (const auto& f : summary.files) std::cout << "wrote " << f.string() << '\n';
      return kPass;
    }
    if (sweep->parsed()) {
      Timer timer("sweep");
      opdyn::SweepOptions o;
      o.n_list = ns;
      o.dt = common.dt;
      const auto rep = opdyn::run_convergence_sweep(sc, o);
      std::cout << opdyn::describe(rep);
      for (const auto& r : rep.rows) std::fprintf(stderr, "[time] N=%ld %.3f s\n", static_cast<long>(r.N), r.wall_seconds);
      std::cout << (rep.passed() ? "PASS" : "FAIL") << '\n';
      return rep.passed() ? kPass : kFail;
    }
    if (sub->parsed()) {
      Timer timer("subordinate");
      opdyn::SubordinationOptions o;
      o.n_list = ns;
      o.dt = common.dt;
      o.pde_n = common.grid;
      const auto rep = opdyn::run_subordination_check(sc, o);
      std::cout << opdyn::describe(rep);
      std::cout << (rep.passed() ? "PASS" : "FAIL") << '\n';
      return rep.passed() ? kPass : kFail;
    }
    if (audit->parsed()) {
      Timer timer("audit");
      opdyn::AuditOptions o;
      o.dt = common.dt;
      const auto rep = opdyn::run_indistinguishability_audit(sc, trials, o);
      std::cout << opdyn::describe(rep);
      std::cout << (rep.passed() ? "PASS" : "FAIL") << '\n';
      return rep.passed() ? kPass : kFail;
    }
    if (fig->parsed()) {
      Timer timer("figure " + figure);
      opdyn::FigureOptions o;
      o.dt = common.dt;
      o.grid = common.grid;
      if (!out_dir.empty()) o.out_dir = out_dir;
      std::filesystem::create_directories(o.out_dir);
      for (const auto& f : opdyn::emit_figure_data(sc, figure, o)) std::cout << "wrote " << f.string() << '\n';
      return kPass;
    }
  } catch (const opdyn::MonitorViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  } catch (const opdyn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
