// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver. Talks to the engine only through the C interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "genret/genret.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError {
  std::string message;
};
struct RuntimeError {
  std::string message;
};

using ConfigPtr = std::unique_ptr<genret_config, decltype(&genret_config_free)>;

std::string TakeString(char* s) {
  std::string out = s ? s : "";
  genret_string_free(s);
  return out;
}

void Check(genret_status status, const std::string& what) {
  if (status != GENRET_OK)
    throw RuntimeError{what + ": " + genret_status_name(status) + ": " +
                       genret_last_error()};
}

// Options every subcommand shares.
struct Common {
  std::string config_path;
  std::optional<long long> seed;
  std::optional<int> jobs;
  std::string output_dir;
  bool verbose = false;
  bool quiet = false;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "seed for every random choice");
  cmd->add_option("--jobs", c.jobs, "maximum worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--output-dir", c.output_dir, "artifact directory (default runs/<config hash>)");
  cmd->add_flag("-v,--verbose", c.verbose, "debug logging");
  cmd->add_flag("-q,--quiet", c.quiet, "errors only");
  cmd->allow_extras();
  cmd->footer(
      "Any config key may be overridden as --<section>.<key> VALUE, "
      "e.g. --train.lambda 0.6");
}

// Splits leftover arguments into dotted key/value overrides.
std::vector<std::pair<std::string, std::string>> DottedOverrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos)
      throw UsageError{"unexpected argument '" + arg + "'"};
    std::string key = arg.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError{"missing value for '" + arg + "'"};
      value = extras[++i];
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ConfigPtr BuildConfig(const Common& c, const std::vector<std::string>& extras) {
  // Flag syntax is checked before any file is touched.
  const auto overrides = DottedOverrides(extras);
  genret_config* raw = nullptr;
  if (c.config_path.empty())
    Check(genret_config_new(&raw), "config");
  else
    Check(genret_config_load(c.config_path.c_str(), &raw), "config " + c.config_path);
  ConfigPtr config(raw, &genret_config_free);

  auto set = [&](const std::string& key, const std::string& value) {
    if (genret_config_set(config.get(), key.c_str(), value.c_str()) != GENRET_OK)
      throw UsageError{"--" + key + ": " + genret_last_error()};
  };
  for (const auto& [key, value] : overrides) set(key, value);
  if (c.seed) set("seed", std::to_string(*c.seed));
  if (c.jobs) set("jobs", std::to_string(*c.jobs));
  if (!c.output_dir.empty()) set("paths.output_dir", c.output_dir);
  return config;
}

void Announce(const genret_config* config) {
  char* dir = nullptr;
  Check(genret_config_output_dir(config, &dir), "config");
  std::cerr << "[genret info] output dir " << TakeString(dir) << "\n";
}

std::string Usage(const CLI::App& app) {
  return app.help("", CLI::AppFormatMode::Normal);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genret: joint generative retrieval and answer generation"};
  app.name("genret");
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", genret_version());

  Common common;
  struct Command {
    CLI::App* app;
    std::function<void(const genret_config*)> run;
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* description,
                 std::function<void(const genret_config*)> run) {
    CLI::App* cmd = app.add_subcommand(name, description);
    AddCommon(cmd, common);
    commands.push_back({cmd, std::move(run)});
    return cmd;
  };

  std::string kind = "both";
  add("gen-connectors", "generate D-Connectors and/or Q-Connectors",
      [&](const genret_config* c) {
        const int kinds = kind == "d"   ? GENRET_CONNECTORS_DOCUMENTS
                          : kind == "q" ? GENRET_CONNECTORS_QUERIES
                                        : GENRET_CONNECTORS_DOCUMENTS | GENRET_CONNECTORS_QUERIES;
        Check(genret_gen_connectors(c, kinds), "gen-connectors");
      })
      ->add_option("--kind", kind, "d, q or both")
      ->check(CLI::IsMember({"d", "q", "both"}));
  add("gen-pseudo", "generate pseudo query/answer pairs",
      [](const genret_config* c) { Check(genret_gen_pseudo(c), "gen-pseudo"); });
  add("build-trie", "build the vocabulary and identifier trie",
      [](const genret_config* c) { Check(genret_build_trie(c), "build-trie"); });
  add("pretrain", "pre-train on pseudo pairs",
      [](const genret_config* c) { Check(genret_pretrain(c), "pretrain"); });
  add("finetune", "fine-tune on labeled queries",
      [](const genret_config* c) { Check(genret_finetune(c), "finetune"); });
  add("retrieve", "rank documents for the evaluation queries",
      [](const genret_config* c) { Check(genret_retrieve(c, 0), "retrieve"); });
  add("answer", "rank documents and generate answers",
      [](const genret_config* c) { Check(genret_retrieve(c, 1), "answer"); });
  add("run-iter", "iterative inference with refreshed Q-Connectors",
      [](const genret_config* c) { Check(genret_run_iter(c), "run-iter"); });

  std::string run_path, queries_path, report_path;
  CLI::App* evaluate = add("evaluate", "score a run against gold queries",
                           [&](const genret_config* c) {
                             char* report = nullptr;
                             Check(genret_evaluate(c, run_path.c_str(), queries_path.c_str(),
                                                   report_path.c_str(), &report),
                                   "evaluate");
                             const auto json = nlohmann::json::parse(TakeString(report));
                             std::cout << json.at("aggregate").dump(2) << "\n";
                           });
  evaluate->add_option("--run", run_path, "run file (default <output dir>/run.jsonl)");
  evaluate->add_option("--queries", queries_path, "gold queries (default from config)");
  evaluate->add_option("--report", report_path, "report path (default <output dir>/report.json)");

  add("curves", "emit iteration and epoch curve CSVs",
      [](const genret_config* c) { Check(genret_curves(c), "curves"); });
  add("run-all", "every stage in order, then evaluate and curves",
      [](const genret_config* c) {
        char* report = nullptr;
        Check(genret_run_all(c, &report), "run-all");
        genret_string_free(report);
      });

  std::vector<std::string> labels, reports;
  std::string out_json = "comparison.json", out_csv = "comparison.csv";
  CLI::App* compare = add("compare", "tabulate several evaluation reports",
                          [&](const genret_config*) {
                            if (labels.size() != reports.size())
                              throw UsageError{"--label and --report counts differ"};
                            std::vector<const char*> l, r;
                            for (const auto& s : labels) l.push_back(s.c_str());
                            for (const auto& s : reports) r.push_back(s.c_str());
                            Check(genret_compare(l.size(), l.data(), r.data(), out_json.c_str(),
                                                 out_csv.c_str()),
                                  "compare");
                          });
  compare->add_option("--label", labels, "row label, one per report")->required();
  compare->add_option("--report", reports, "report.json path")->required();
  compare->add_option("--out-json", out_json, "comparison JSON path");
  compare->add_option("--out-csv", out_csv, "comparison CSV path");

  if (argc < 2) {
    std::cerr << Usage(app);
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << (app.get_subcommands().empty() ? Usage(app)
                                                : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << genret_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "genret: " << e.what() << "\n\n" << Usage(app);
    return kExitUsage;
  }

  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    const auto extras = app.remaining();
    std::cerr << "genret: "
              << (extras.empty() ? "no subcommand" : "unknown subcommand '" + extras.front() + "'")
              << "\n\n"
              << Usage(app);
    return kExitUsage;
  }

  genret_set_log_level(common.verbose ? GENRET_LOG_DEBUG
                       : common.quiet ? GENRET_LOG_ERROR
                                      : GENRET_LOG_INFO);
  for (const Command& cmd : commands) {
    if (cmd.app != chosen.front()) continue;
    try {
      ConfigPtr config = BuildConfig(common, cmd.app->remaining());
      if (!common.quiet && cmd.app->get_name() != "compare") Announce(config.get());
      cmd.run(config.get());
      return kExitOk;
    } catch (const UsageError& e) {
      std::cerr << "genret " << cmd.app->get_name() << ": " << e.message << "\n";
      return kExitUsage;
    } catch (const RuntimeError& e) {
      std::cerr << "genret " << cmd.app->get_name() << ": " << e.message << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}
