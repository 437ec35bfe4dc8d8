// Operator entry point: fincon <verb> --config <file> [options]

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fincon/fincon.h"

namespace {

int exit_code_for(fincon_status s) {
  switch (s) {
    case FINCON_OK: return 0;
    case FINCON_ERR_CONFIG:
    case FINCON_ERR_DATA:
    case FINCON_ERR_NOT_FOUND:
    case FINCON_ERR_MISSING_ARTIFACTS:
    case FINCON_ERR_INVALID_ARGUMENT: return 1;
    default: return 2;
  }
}

int fail(fincon_status s) {
  std::fprintf(stderr, "fincon: %s\n", fincon_last_error());
  return exit_code_for(s);
}

struct Options {
  std::string config;
  std::string mock_script;
  std::string run_dir = "fincon_run";
  std::vector<std::string> overrides;
  unsigned long long seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config) {
  auto* cfg = cmd->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  if (needs_config) cfg->required();
  cmd->add_option("--mock-script", o.mock_script, "Scripted LLM responses (JSONL); disables network backends")
      ->check(CLI::ExistingFile);
  cmd->add_option("--run-dir", o.run_dir, "Directory for run artifacts");
  cmd->add_option("--override", o.overrides, "Config override key=value (repeatable)");
  cmd->add_option_function<unsigned long long>(
      "--seed",
      [&o](const unsigned long long& v) {
        o.seed = v;
        o.seed_given = true;
      },
      "Gateway seed");
}

fincon_status open_engine(const Options& o, fincon_engine** engine) {
  fincon_status s = fincon_engine_create(o.config.c_str(), engine);
  if (s != FINCON_OK) return s;
  for (const auto& ov : o.overrides)
    if ((s = fincon_engine_add_override(*engine, ov.c_str())) != FINCON_OK) return s;
  if (!o.mock_script.empty() && (s = fincon_engine_set_mock_script(*engine, o.mock_script.c_str())) != FINCON_OK)
    return s;
  if (o.seed_given && (s = fincon_engine_set_seed(*engine, o.seed)) != FINCON_OK) return s;
  return fincon_engine_set_run_dir(*engine, o.run_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent trading backtester"};
  app.require_subcommand(1);
  Options o;
  auto* validate = app.add_subcommand("validate-data", "Load and check price and document data");
  auto* train = app.add_subcommand("train", "Run training episodes with belief updates");
  auto* test = app.add_subcommand("test", "Run the test pass with inherited prompts and memory");
  auto* report = app.add_subcommand("report", "Recompute report.json and metrics.csv from a run directory");
  auto* select = app.add_subcommand("select-stocks", "Pick a diversified portfolio pool");
  for (auto* cmd : {validate, train, test, select}) add_common(cmd, o, true);
  add_common(report, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (report->parsed()) {
    fincon_metrics m{};
    const fincon_status s = fincon_report(o.run_dir.c_str(), &m);
    if (s != FINCON_OK) return fail(s);
    std::fprintf(stderr, "report: %zu days, CR %.4f%%, MDD %.4f%%\n", m.days, m.cumulative_return_pct,
                 m.max_drawdown_pct);
    return 0;
  }

  fincon_engine* engine = nullptr;
  fincon_status s = open_engine(o, &engine);
  if (s == FINCON_OK) {
    if (validate->parsed()) {
      s = fincon_validate_data(engine);
      if (s == FINCON_OK) std::fprintf(stderr, "data ok\n");
    } else if (train->parsed()) {
      fincon_train_summary t{};
      s = fincon_train(engine, &t);
      if (s == FINCON_OK)
        std::fprintf(stderr, "trained %zu episodes, %zu belief updates, last objective %.6f\n", t.episodes,
                     t.belief_updates, t.last_objective);
    } else if (test->parsed()) {
      fincon_metrics m{};
      s = fincon_test(engine, &m);
      if (s == FINCON_OK)
        std::fprintf(stderr, "test: %zu days, CR %.4f%%, MDD %.4f%%\n", m.days, m.cumulative_return_pct,
                     m.max_drawdown_pct);
    } else if (select->parsed()) {
      s = fincon_select_stocks(engine);
      if (s == FINCON_OK) std::fprintf(stderr, "selection written\n");
    }
  }
  fincon_engine_destroy(engine);
  return s == FINCON_OK ? 0 : fail(s);
}
