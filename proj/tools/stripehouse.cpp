// Copyright 2026 The Stripehouse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// stripehouse: command-line front end for generation, ingestion, queries,
// the multi-user service and the benchmark harness.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stripehouse/bench.hpp"
#include "stripehouse/catalog.hpp"
#include "stripehouse/datagen.hpp"
#include "stripehouse/engine.hpp"
#include "stripehouse/error.hpp"
#include "stripehouse/ingest.hpp"
#include "stripehouse/planner.hpp"
#include "stripehouse/query.hpp"
#include "stripehouse/service.hpp"
#include "stripehouse/stripe.hpp"

namespace sh = stripehouse;
using nlohmann::json;

namespace {

sh::StorageFormat format_arg(const std::string& text) {
  const auto f = sh::parse_storage_format(text);
  if (!f) throw sh::Error(sh::ErrorCode::FormatMismatch, "unknown format '" + text + "' (rowtext or stripe)");
  return *f;
}

// With --format, a table whose stored format differs is swapped for its
// sibling `<table>_<format>` when one exists.
void retarget(sh::QueryAst& ast, const sh::Catalog& catalog, sh::StorageFormat want) {
  const auto swap = [&](sh::TableRef& ref) {
    if (!catalog.has_table(ref.name) || catalog.get_table(ref.name).format == want) return;
    const std::string sibling = ref.name + "_" + std::string(sh::storage_format_name(want));
    if (!catalog.has_table(sibling)) {
      throw sh::Error(sh::ErrorCode::FormatMismatch, "table " + ref.name + " is not stored as " +
                                                         std::string(sh::storage_format_name(want)) + " and " +
                                                         sibling + " does not exist");
    }
    if (ref.alias.empty()) ref.alias = ref.name;
    ref.name = sibling;
  };
  swap(ast.from);
  if (ast.join) swap(ast.join->table);
}

struct ExecArgs {
  std::uint32_t executors = 8;
  std::uint32_t cores = 3;
  std::uint64_t mem_rows = 1ULL << 22;
  bool no_prune = false;
  std::string format;

  void add_to(CLI::App* app) {
    app->add_option("--executors,-E", executors, "Executor count")->capture_default_str();
    app->add_option("--cores,-C", cores, "Task slots per executor")->capture_default_str();
    app->add_option("--mem-rows,-B", mem_rows, "Row budget per executor")->capture_default_str();
    app->add_flag("--no-prune", no_prune, "Disable stripe pruning");
    app->add_option("--format", format, "Prefer tables stored as rowtext or stripe");
  }

  sh::ExecConfig config() const {
    sh::ExecConfig c;
    c.executors = executors;
    c.cores_per_executor = cores;
    c.executor_mem_rows = mem_rows;
    c.prune = !no_prune;
    c.validate();
    return c;
  }
};

sh::PhysicalPlan plan_sql(const std::string& sql, const sh::Catalog& catalog, const ExecArgs& args,
                          const sh::ExecConfig& config) {
  sh::QueryAst ast = sh::parse(sql);
  if (!args.format.empty()) retarget(ast, catalog, format_arg(args.format));
  return sh::plan(sh::validate(ast, catalog), catalog, config);
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stripehouse: partitioned row-text and stripe tables with a parallel query engine"};
  app.require_subcommand(1);
  std::string root;
  if (const char* env = std::getenv("STRIPEHOUSE_ROOT")) root = env;
  if (root.empty()) root = ".";
  app.add_option("--root", root, "Data root holding catalog.json (env STRIPEHOUSE_ROOT)");

  // gen
  auto* gen = app.add_subcommand("gen", "Write synthetic encounter.csv and lab_procedure.csv");
  sh::GenSpec spec;
  std::string gen_out = ".";
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--patients", spec.n_patients)->capture_default_str();
  gen->add_option("--encounters", spec.n_encounters)->capture_default_str();
  gen->add_option("--labs", spec.n_labs)->capture_default_str();
  gen->add_option("--hospitals", spec.n_hospitals)->capture_default_str();
  gen->add_option("--lab-codes", spec.n_lab_codes)->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // create
  auto* create = app.add_subcommand("create", "Create an empty table");
  std::string create_table, create_schema, create_format = "stripe";
  create->add_option("--table", create_table)->required();
  create->add_option("--schema", create_schema, "name:TYPE[?],... where ? marks nullable")->required();
  create->add_option("--format", create_format)->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a CSV file into a table");
  std::string ingest_table, ingest_csv_path, ingest_format = "stripe";
  sh::IngestOptions ingest_opts;
  ingest->add_option("--table", ingest_table)->required();
  ingest->add_option("--csv", ingest_csv_path)->required();
  ingest->add_option("--format", ingest_format)->capture_default_str();
  ingest->add_option("--partitions", ingest_opts.partitions)->capture_default_str();
  ingest->add_option("--stripe-size", ingest_opts.stripe_size)->capture_default_str();
  ingest->add_option("--workers", ingest_opts.workers)->capture_default_str();

  // query / explain
  auto* query = app.add_subcommand("query", "Run a query");
  std::string query_sql;
  bool query_json = false;
  ExecArgs query_args;
  query->add_option("-e,--execute", query_sql, "Query text")->required();
  query->add_flag("--json", query_json, "Emit results and metrics as JSON");
  query_args.add_to(query);

  auto* explain = app.add_subcommand("explain", "Show the physical plan and cost table");
  std::string explain_sql;
  ExecArgs explain_args;
  explain->add_option("-e,--execute", explain_sql, "Query text")->required();
  explain_args.add_to(explain);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Dump a stripe file footer");
  std::string inspect_file;
  inspect->add_option("file", inspect_file)->required();

  // serve / client
  auto* serve = app.add_subcommand("serve", "Run the multi-user query service");
  std::string serve_config;
  int serve_port = -1;
  serve->add_option("--config", serve_config, "JSON config file");
  serve->add_option("--port", serve_port, "Listen port (overrides the config)");

  auto* client = app.add_subcommand("client", "Talk to a running service");
  std::string client_host = "127.0.0.1", client_user, client_token, client_sql, client_grant, client_deny;
  std::uint16_t client_port = 7878;
  bool client_ping = false;
  client->add_option("--host", client_host)->capture_default_str();
  client->add_option("--port", client_port)->capture_default_str();
  client->add_option("--user", client_user);
  client->add_option("--token", client_token);
  client->add_option("-e,--execute", client_sql, "Query text");
  client->add_option("--grant", client_grant, "USER:TABLE to allow (admin only)");
  client->add_option("--deny", client_deny, "USER:TABLE to deny (admin only)");
  client->add_flag("--ping", client_ping);

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark scenarios");
  std::string bench_scenario = "all", bench_out = "bench-out", bench_work;
  sh::BenchPlan bench_plan;
  std::vector<std::uint64_t> bench_sizes;
  std::vector<std::uint32_t> bench_sweep;
  bench->add_option("--scenario", bench_scenario)
      ->check(CLI::IsMember({"simple", "complex", "executors", "all"}))
      ->capture_default_str();
  bench->add_option("--out", bench_out)->capture_default_str();
  bench->add_option("--work", bench_work, "Scratch directory for generated data (default OUT/work)");
  bench->add_option("--sizes", bench_sizes, "Lab row counts, ascending");
  bench->add_option("--executors", bench_sweep, "Executor sweep");
  bench->add_option("--seed", bench_plan.seed)->capture_default_str();
  bench->add_option("--repeats", bench_plan.repeats)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto files = sh::generate(spec, gen_out);
      std::cout << files.encounter_csv.string() << "\n" << files.lab_procedure_csv.string() << "\n";
    } else if (*create) {
      sh::Catalog catalog(root);
      catalog.create_table(sh::parse_schema_spec(create_table, create_schema), format_arg(create_format));
      std::cout << "created " << create_table << "\n";
    } else if (*ingest) {
      sh::Catalog catalog(root);
      ingest_opts.format = format_arg(ingest_format);
      const auto entry = sh::ingest_csv(catalog, ingest_csv_path, ingest_table, ingest_opts);
      std::cout << entry.schema.table_name << ": " << entry.row_count() << " rows in " << entry.partitions.size()
                << " partitions (" << sh::storage_format_name(entry.format) << ")\n";
    } else if (*query) {
      sh::Catalog catalog(root);
      const auto config = query_args.config();
      const auto p = plan_sql(query_sql, catalog, query_args, config);
      sh::Engine engine(catalog.data_root() / "shuffle");
      const auto result = engine.execute(p, config);
      if (query_json) {
        std::cout << sh::result_to_json(result).dump(2) << "\n";
      } else {
        std::cout << sh::format_result(result.table) << sh::format_metrics(result.metrics) << "\n";
      }
    } else if (*explain) {
      sh::Catalog catalog(root);
      const auto config = explain_args.config();
      const std::uint32_t sweep[] = {1, 2, 4, 8, 16, 32};
      std::cout << sh::explain(plan_sql(explain_sql, catalog, explain_args, config), config, sweep);
    } else if (*inspect) {
      std::cout << sh::format_footer(sh::read_footer(inspect_file));
    } else if (*serve) {
      sh::ServiceConfig cfg = sh::load_service_config(serve_config);
      if (serve_config.empty() && !app.get_option("--root")->empty()) cfg.data_root = root;
      if (serve_port >= 0) cfg.port = static_cast<std::uint16_t>(serve_port);
      sh::Server server(cfg);
      const auto port = server.start();
      std::cerr << "stripehouse listening on port " << port << " (root " << cfg.data_root.string() << ")\n";
      static sh::Server* active = &server;
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        active->stop();
      });
      server.run();
      g_stop = 1;
      watcher.join();
    } else if (*client) {
      sh::Client c(client_host, client_port);
      int status = 0;
      const auto show = [&](const json& reply) {
        std::cout << reply.dump(2) << "\n";
        if (reply.value("type", "") == "error") status = 1;
      };
      if (client_ping) show(c.request({{"type", "ping"}}));
      if (!client_user.empty()) show(c.request({{"type", "hello"}, {"user", client_user}, {"token", client_token}}));
      for (const auto& [kind, arg] : {std::pair{"grant", client_grant}, std::pair{"deny", client_deny}}) {
        if (arg.empty()) continue;
        const auto colon = arg.find(':');
        if (colon == std::string::npos) throw sh::Error(sh::ErrorCode::ParseError, "expected USER:TABLE, got " + arg);
        show(c.request({{"type", kind},
                        {"rule", {{"user", arg.substr(0, colon)}, {"table", arg.substr(colon + 1)}, {"action", "SELECT"}}}}));
      }
      if (!client_sql.empty()) show(c.request({{"type", "query"}, {"sql", client_sql}}));
      return status;
    } else if (*bench) {
      bench_plan.simple = bench_scenario == "simple" || bench_scenario == "all";
      bench_plan.complex = bench_scenario == "complex" || bench_scenario == "all";
      bench_plan.executors = bench_scenario == "executors" || bench_scenario == "all";
      if (!bench_sizes.empty()) bench_plan.sizes = bench_sizes;
      if (!bench_sweep.empty()) bench_plan.sweep = bench_sweep;
      bench_plan.out_dir = bench_out;
      bench_plan.work_dir = bench_work;
      sh::run_bench(bench_plan, &std::cerr);
      std::cout << (bench_plan.out_dir / "bench.csv").string() << "\n";
    }
  } catch (const sh::Error& e) {
    std::cerr << "error " << sh::error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
