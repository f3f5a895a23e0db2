// pikl3: engine self-test, data generation, training stages, evaluation and
// the live play server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "json.hpp"
#include "pikl/errors.h"
#include "pikl/harness/dataset.h"
#include "pikl/harness/eval.h"
#include "pikl/harness/pipeline.h"
#include "pikl/harness/server.h"
#include "pikl/harness/session.h"
#include "pikl/policy/checkpoint.h"
#include "pikl/search/search.h"

namespace {

using namespace pikl;
using nlohmann::json;

harness::RunConfig LoadConfig(const std::string& path) {
  return path.empty() ? harness::RunConfig{} : harness::RunConfig::Load(path);
}

void MakeDir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::optional<double> OptLambda(double v) {
  return std::isnan(v) ? std::nullopt : std::optional<double>(v);
}

void OnSignal(int) { std::_Exit(0); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piKL3 on configurable Hanabi"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "run config (JSON with schema_version)");

  // engine-selftest
  auto* st = app.add_subcommand("engine-selftest", "fuzz the rules with random-legal games");
  int64_t st_games = 10000;
  uint64_t st_seed = 1;
  st->add_option("--games", st_games);
  st->add_option("--seed", st_seed);

  // gen-data
  auto* gd = app.add_subcommand("gen-data", "write synthetic human games as JSONL");
  std::string gd_out;
  gd->add_option("--out", gd_out)->required();

  // bc-train
  auto* bc = app.add_subcommand("bc-train", "behavioral cloning from a JSONL dataset");
  std::string bc_data, bc_out;
  bc->add_option("--data", bc_data)->required();
  bc->add_option("--out", bc_out, "checkpoint path")->required();

  // pikl-il
  auto* il = app.add_subcommand("pikl-il", "iterated search + imitation");
  std::string il_anchor, il_out;
  il->add_option("--anchor", il_anchor)->required();
  il->add_option("--out", il_out)->required();

  // pikl-br
  auto* br = app.add_subcommand("pikl-br", "regularized best response");
  std::string br_partner, br_anchor, br_out;
  br->add_option("--partner", br_partner)->required();
  br->add_option("--anchor", br_anchor)->required();
  br->add_option("--out", br_out)->required();

  // eval
  auto* ev = app.add_subcommand("eval", "cross-play evaluation");
  std::string ev_a, ev_b, ev_records;
  int64_t ev_games = -1;
  int64_t ev_seed_base = -1;
  double ev_la = NAN, ev_lb = NAN;
  bool ev_sample = false;
  int ev_workers = 1;
  ev->add_option("--a", ev_a, "policy spec: uniform | scripted:<skill>:<noise> | checkpoint")
      ->required();
  ev->add_option("--b", ev_b, "partner spec (defaults to --a)");
  ev->add_option("--games", ev_games);
  ev->add_option("--seed-base", ev_seed_base);
  ev->add_option("--lambda-a", ev_la);
  ev->add_option("--lambda-b", ev_lb);
  ev->add_flag("--sample", ev_sample, "sample actions instead of argmax");
  ev->add_option("--workers", ev_workers);
  ev->add_option("--records", ev_records, "write game records as JSONL");

  // serve
  auto* sv = app.add_subcommand("serve", "live human-vs-agent server");
  std::string sv_agent = "pikl_test_time", sv_br, sv_partner, sv_belief = "count-prior";
  std::string sv_host = "127.0.0.1", sv_web = "web", sv_records = "sessions.jsonl";
  uint16_t sv_port = 8080;
  int sv_rollouts = search::kTestTimeRollouts;
  double sv_lambda = search::kTestTimeLambda;
  sv->add_option("--agent", sv_agent, "br_baseline | pikl_test_time");
  sv->add_option("--br", sv_br, "BR policy spec")->required();
  sv->add_option("--partner", sv_partner, "partner model for search (defaults to --br)");
  sv->add_option("--belief", sv_belief, "count-prior | belief checkpoint");
  sv->add_option("--lambda", sv_lambda);
  sv->add_option("--rollouts", sv_rollouts);
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port);
  sv->add_option("--web-dir", sv_web);
  sv->add_option("--records", sv_records, "append finished sessions as JSONL");

  auto* pc = app.add_subcommand("print-config", "print the effective run config");

  // table1
  auto* t1 = app.add_subcommand("table1", "full pipeline and evaluation grid");
  std::string t1_out;
  t1->add_option("--out", t1_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const harness::RunConfig cfg = LoadConfig(config_path);
    const auto& game = cfg.game;

    if (*pc) {
      std::cout << cfg.ToJson().dump(2) << "\n";
      return 0;
    }
    if (*st) {
      const auto r = harness::EngineSelfTest(game, st_games, st_seed);
      std::cout << r.ToJson().dump() << "\n";
      return r.ok() ? 0 : 1;
    }
    if (*gd) {
      const auto data = harness::GenerateHumanData(game, cfg.human);
      harness::WriteDataset(gd_out, data);
      std::cout << json{{"games", data.size()}, {"out", gd_out}}.dump() << "\n";
      return 0;
    }
    if (*bc) {
      const auto data = harness::ReadDataset(bc_data);
      for (const auto& r : data) {
        if (r.config.Hash() != game.Hash()) {
          throw ConfigError("dataset config differs from run config");
        }
      }
      policy::TrainReport report;
      auto net = policy::BcTrain(data, {cfg.bc_color_shuffle, false, {}, "bc"}, cfg.bc, &report);
      if (auto p = std::filesystem::path(bc_out).parent_path(); !p.empty()) MakeDir(p.string());
      policy::SaveCheckpoint(net->ToCheckpoint(), bc_out);
      std::cout << report.ToJson().dump() << "\n";
      return 0;
    }
    if (*il) {
      MakeDir(il_out);
      auto anchor = harness::LoadPolicySpec(il_anchor, game);
      il::ILHooks hooks;
      hooks.progress = &std::cout;
      hooks.out_dir = il_out;
      const auto r = il::RunPiklIl(anchor, cfg.lambdas, cfg.il, hooks);
      if (auto* n = dynamic_cast<const policy::NetworkPolicy*>(r.il.get())) {
        policy::SaveCheckpoint(n->ToCheckpoint(), il_out + "/il.json");
      }
      if (auto* n = dynamic_cast<const policy::NetworkPolicy*>(r.il_prime.get())) {
        policy::SaveCheckpoint(n->ToCheckpoint(), il_out + "/il_prime.json");
      }
      if (r.belief) policy::SaveCheckpoint(r.belief->ToCheckpoint(), il_out + "/belief.json");
      return 0;
    }
    if (*br) {
      MakeDir(br_out);
      br::BRConfig brc = cfg.br;
      brc.partner_lambda_vocabulary = cfg.lambdas.Mus();
      br::BRReport report;
      br::BRHooks hooks;
      hooks.progress = &std::cout;
      auto q = br::TrainBr(harness::LoadPolicySpec(br_partner, game),
                           harness::LoadPolicySpec(br_anchor, game), brc, &report, hooks);
      policy::SaveCheckpoint(q->ToCheckpoint(), br_out + "/br.json");
      std::ofstream(br_out + "/report.json") << report.ToJson().dump(2) << "\n";
      return 0;
    }
    if (*ev) {
      auto a = harness::LoadPolicySpec(ev_a, game);
      auto b = ev_b.empty() ? a : harness::LoadPolicySpec(ev_b, game);
      harness::EvalOptions opts;
      opts.lambda_a = OptLambda(ev_la);
      opts.lambda_b = OptLambda(ev_lb);
      opts.greedy = !ev_sample;
      opts.workers = ev_workers;
      std::unique_ptr<harness::DatasetWriter> writer;
      if (!ev_records.empty()) {
        writer = std::make_unique<harness::DatasetWriter>(ev_records);
        opts.on_record = [&](const hanabi::GameRecord& r) { writer->Write(r); };
      }
      const auto rep = harness::Evaluate(*a, *b, ev_games > 0 ? ev_games : cfg.eval_games,
                                         ev_seed_base >= 0 ? ev_seed_base : cfg.eval_seed_base,
                                         opts);
      if (writer) writer->Flush();
      json j = rep.ToJson();
      j.erase("seeds");
      j.erase("scores");
      std::cout << j.dump() << "\n";
      return 0;
    }
    if (*sv) {
      const auto kind = harness::AgentKindFromName(sv_agent);
      auto br_policy = harness::LoadPolicySpec(sv_br, game);
      auto partner = sv_partner.empty() ? br_policy : harness::LoadPolicySpec(sv_partner, game);
      auto belief = harness::LoadBeliefSpec(sv_belief, game);
      std::mutex mu;
      harness::DatasetWriter writer(sv_records, /*append=*/true);
      harness::ServerOptions so;
      so.host = sv_host;
      so.port = sv_port;
      so.web_dir = sv_web;
      harness::WebServer server(so, [&](harness::Transport& t, int64_t id) {
        // Search agents keep per-game state, so each session gets its own.
        policy::PolicyPtr agent = br_policy;
        if (kind == harness::AgentKind::kPiklTestTime) {
          agent = search::TestTimeAgent(br_policy, partner, belief, sv_lambda, sv_rollouts,
                                        DeriveSeed(0x5e55, id));
        }
        harness::SessionOptions opts;
        opts.session_id = "s" + std::to_string(id);
        opts.human_seat = static_cast<int>(id % 2);
        opts.agent_kind = kind;
        opts.seed = DeriveSeed(0x9a3e, id);
        opts.think = cfg.think;
        const auto rec = harness::PlaySession(agent, opts).Run(t);
        std::lock_guard<std::mutex> lock(mu);
        writer.Write(rec);
        writer.Flush();
        std::cerr << json{{"event", "session_done"},
                          {"session", opts.session_id},
                          {"score", rec.final_score},
                          {"aborted", rec.aborted}}
                         .dump()
                  << std::endl;
      });
      server.Start();
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      std::cerr << json{{"event", "listening"}, {"host", sv_host}, {"port", server.port()}}.dump()
                << std::endl;
      server.Wait();
      return 0;
    }
    if (*t1) {
      const auto r = harness::RunTable1(cfg, &std::cerr, t1_out);
      std::cout << r.ToJson().dump(2) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
