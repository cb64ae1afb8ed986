// Command-line front end for the satellite QKD pass simulator.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "satqkd/batch.hpp"
#include "satqkd/optimizer.hpp"
#include "satqkd/pipeline.hpp"
#include "satqkd/scenario.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> weather_db;

  [[nodiscard]] satqkd::ScenarioOverrides overrides() const { return {seed, weather_db}; }

  [[nodiscard]] satqkd::Scenario scenario() const {
    satqkd::Scenario s = satqkd::load_scenario(config);
    overrides().apply(s);
    return s;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& config_help) {
  cmd->add_option("--config", f.config, config_help)->required();
  cmd->add_option("--seed", f.seed, "Override the scenario seed");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--weather-db", f.weather_db, "Override the weather loss offset (dB)")->check(CLI::NonNegativeNumber);
}

void print_pass(const satqkd::PassReport& r) {
  std::cout << r.scenario.id << ": " << r.total_detections << " detections, " << r.total_sifted
            << " sifted bits, QBER " << satqkd::format_fixed(100.0 * r.average_qber(), 3) << "%, final key "
            << r.key.final_length << " bits";
  if (!r.key.abort_reason.empty()) std::cout << " (" << r.key.abort_reason << ")";
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Satellite-to-ground decoy-state BB84 pass simulator"};
  app.require_subcommand(1);

  CommonFlags pass_flags;
  bool write_events = false;
  bool write_tracking = false;
  auto* pass = app.add_subcommand("pass", "Simulate one pass and write its reports");
  add_common(pass, pass_flags, "Scenario file");
  pass->add_flag("--events", write_events, "Also write events.csv");
  pass->add_flag("--tracking", write_tracking, "Also write the tracking trace");

  CommonFlags batch_flags;
  unsigned workers = 0;
  auto* batch = app.add_subcommand("batch", "Simulate every scenario file of a directory");
  add_common(batch, batch_flags, "Directory of *.cfg scenario files");
  batch->add_option("--jobs", workers, "Concurrent pipelines (0 = automatic)");

  CommonFlags opt_flags;
  auto* optimize = app.add_subcommand("optimize", "Search source intensities and probabilities");
  add_common(optimize, opt_flags, "Scenario file");

  CommonFlags fiber_flags;
  auto* fiber = app.add_subcommand("fiber-compare", "Compare the pass with direct fiber transmission");
  add_common(fiber, fiber_flags, "Scenario file");

  CommonFlags budget_flags;
  auto* budget = app.add_subcommand("budget", "Write the link-loss ledger of the pass");
  add_common(budget, budget_flags, "Scenario file");

  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    if (*pass) {
      const auto s = pass_flags.scenario();
      const auto r = satqkd::run_scenario(s, {write_tracking, write_events});
      satqkd::emit_reports(r, pass_flags.out, {write_events, write_tracking});
      print_pass(r);
    } else if (*batch) {
      const auto entries =
          satqkd::run_batch(batch_flags.config, batch_flags.out, batch_flags.overrides(), workers);
      std::cout << entries.size() << " scenarios written to " << batch_flags.out << '\n';
    } else if (*optimize) {
      const auto s = opt_flags.scenario();
      const auto r = satqkd::optimize_source_parameters(s);
      satqkd::detail::ensure_directory(opt_flags.out);
      satqkd::detail::write_file(fs::path(opt_flags.out) / "optimize.txt",
                                 [&](std::ostream& os) { satqkd::write_optimization(os, s, r); });
      satqkd::write_optimization(std::cout, s, r);
    } else if (*fiber) {
      const auto s = fiber_flags.scenario();
      const auto link = satqkd::prepare_link(s);
      satqkd::detail::ensure_directory(fiber_flags.out);
      satqkd::detail::write_file(fs::path(fiber_flags.out) / "fiber_compare.csv", [&](std::ostream& os) {
        satqkd::write_fiber_csv(os, satqkd::fiber_table(s, link));
      });
    } else if (*budget) {
      const auto s = budget_flags.scenario();
      const auto link = satqkd::prepare_link(s);
      satqkd::detail::ensure_directory(budget_flags.out);
      satqkd::detail::write_file(fs::path(budget_flags.out) / "budget.csv", [&](std::ostream& os) {
        satqkd::write_budget_csv(os, link.pass, link.budgets);
      });
    }
  } catch (const satqkd::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.message() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
