#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adaptnav/cli/cli.hpp"
#include "adaptnav/core/io.hpp"
#include "adaptnav/world/world.hpp"

using namespace adaptnav;

namespace {

struct CliResult {
  int rc = -1;
  std::string out;
  std::string err;
};

// Runs the CLI in-process with stdout/stderr captured.
CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult r;
  try {
    r.rc = run_cli(std::move(args));
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Scratch directory with a small config; removed on destruction.
struct CliDir {
  std::filesystem::path dir;

  CliDir() {
    static int counter = 0;
    dir = std::filesystem::temp_directory_path() /
          ("adaptnav_cli_" + std::to_string(++counter));
    std::filesystem::create_directories(dir);
    atomic_write_file(path("tiny.cfg"),
                      "world.nodes = 10\n"
                      "world.feature_dim = 16\n"
                      "encoder.dim = 16\n"
                      "model.hidden_dim = 16\n"
                      "model.heads = 2\n"
                      "model.layers = 1\n"
                      "model.max_steps = 6\n"
                      "episodes.min_path_nodes = 3\n"
                      "episodes.max_path_nodes = 4\n"
                      "data.train_worlds = 2\n"
                      "data.val_worlds = 1\n"
                      "data.train_episodes = 12\n"
                      "data.val_unseen_episodes = 4\n"
                      "prompt.nmax = 4\n"
                      "train.batch_size = 2\n"
                      "train.stage1_iters = 6\n"
                      "train.stage2_iters = 4\n"
                      "train.eval_every = 3\n"
                      "train.early_stop_evals = 0\n");
  }

  ~CliDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }

  std::string path(const std::string& name) const {
    return (dir / name).string();
  }

  std::string cfg() const { return path("tiny.cfg"); }

  // gen-episodes + build-prompt-base, reused by most cases.
  void make_data() {
    REQUIRE(run({"gen-episodes", "--config", cfg(), "--out",
                 path("eps.jsonl")}).rc == 0);
    REQUIRE(run({"build-prompt-base", "--config", cfg(), "--episodes",
                 path("eps.jsonl"), "--out", path("base.jsonl")}).rc == 0);
  }
};

}  // namespace

TEST_CASE("cli help exits zero and lists every subcommand and flag") {
  auto top = run({"--help"});
  CHECK(top.rc == 0);
  for (const char* sub : {"gen-world", "gen-episodes", "build-prompt-base",
                          "train", "eval", "inspect-prompts"})
    CHECK(top.out.find(sub) != std::string::npos);

  auto tr = run({"train", "--help"});
  CHECK(tr.rc == 0);
  for (const char* flag : {"--config", "--episodes", "--stage", "--ckpt",
                           "--base", "--seed", "--out"})
    CHECK(tr.out.find(flag) != std::string::npos);

  auto ev = run({"eval", "--help"});
  CHECK(ev.rc == 0);
  for (const char* flag : {"--config", "--ckpt", "--episodes", "--base", "--out"})
    CHECK(ev.out.find(flag) != std::string::npos);

  auto ip = run({"inspect-prompts", "--help"});
  CHECK(ip.rc == 0);
  for (const char* flag : {"--base", "--instruction", "--nmax"})
    CHECK(ip.out.find(flag) != std::string::npos);

  auto bp = run({"build-prompt-base", "--help"});
  CHECK(bp.rc == 0);
  CHECK(bp.out.find("--tau1") != std::string::npos);
}

TEST_CASE("cli rejects unknown flags and missing subcommands") {
  CHECK(run({"eval", "--episodes", "x.jsonl", "--bogus"}).rc != 0);
  CHECK(run({}).rc != 0);
  CHECK(run({"no-such-subcommand"}).rc != 0);
}

TEST_CASE("cli reports missing config file with its path on one stderr line") {
  CliDir d;
  auto r = run({"train", "--config", "missing.cfg", "--episodes",
                d.path("eps.jsonl"), "--stage", "1", "--out",
                d.path("x.ckpt")});
  CHECK(r.rc != 0);
  CHECK(r.err.find("error:") == 0);
  CHECK(r.err.find("missing.cfg") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("cli gen-world writes a loadable graph and is seed-idempotent") {
  CliDir d;
  auto r1 = run({"gen-world", "--config", d.cfg(), "--seed", "321", "--out",
                 d.path("w.json")});
  REQUIRE(r1.rc == 0);
  auto vocabs = Vocabularies::default_synthetic();
  Config cfg;
  cfg.apply_file(d.cfg());
  cfg.validate();
  auto wp = WorldParams::from_config(cfg, vocabs);
  NavGraph g = graph_from_json(read_file(d.path("w.json")), wp);
  CHECK(g.nodes.size() == 10);
  CHECK(g.seed == 321);

  auto r2 = run({"gen-world", "--config", d.cfg(), "--seed", "321", "--out",
                 d.path("w2.json")});
  REQUIRE(r2.rc == 0);
  CHECK(read_file(d.path("w.json")) == read_file(d.path("w2.json")));
}

TEST_CASE("cli gen-episodes is byte-idempotent for a fixed seed") {
  CliDir d;
  REQUIRE(run({"gen-episodes", "--config", d.cfg(), "--out",
               d.path("a.jsonl")}).rc == 0);
  REQUIRE(run({"gen-episodes", "--config", d.cfg(), "--out",
               d.path("b.jsonl")}).rc == 0);
  CHECK(read_file(d.path("a.jsonl")) == read_file(d.path("b.jsonl")));

  REQUIRE(run({"gen-episodes", "--config", d.cfg(), "--seed", "777", "--out",
               d.path("c.jsonl")}).rc == 0);
  CHECK(read_file(d.path("a.jsonl")) != read_file(d.path("c.jsonl")));
}

TEST_CASE("cli pipeline: episodes, prompt base, two-stage training, eval") {
  CliDir d;
  d.make_data();

  auto s1 = run({"train", "--config", d.cfg(), "--episodes", d.path("eps.jsonl"),
                 "--stage", "1", "--out", d.path("s1.ckpt")});
  REQUIRE(s1.rc == 0);
  CHECK(s1.out.find("stage 1 done") != std::string::npos);
  CHECK(std::filesystem::exists(d.path("s1.ckpt")));

  // Training log: one JSON object per iteration with the loss fields.
  std::istringstream log(read_file(d.path("s1.ckpt.log.jsonl")));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    auto j = nlohmann::json::parse(line);
    for (const char* key : {"iter", "L_RL", "L_IL", "L_c", "L_a", "total", "pass"})
      CHECK(j.contains(key));
    ++lines;
  }
  CHECK(lines == 6);

  auto s2 = run({"train", "--config", d.cfg(), "--episodes", d.path("eps.jsonl"),
                 "--stage", "2", "--ckpt", d.path("s1.ckpt"), "--base",
                 d.path("base.jsonl"), "--out", d.path("s2.ckpt")});
  REQUIRE(s2.rc == 0);
  CHECK(std::filesystem::exists(d.path("s2.ckpt")));

  auto ev = run({"eval", "--config", d.cfg(), "--ckpt", d.path("s2.ckpt"),
                 "--episodes", d.path("eps.jsonl"), "--base", d.path("base.jsonl"),
                 "--out", d.path("report.json")});
  REQUIRE(ev.rc == 0);
  auto report = nlohmann::json::parse(read_file(d.path("report.json")));
  for (const char* key : {"split", "n_episodes", "success_radius", "TL", "NE",
                          "SR", "SPL", "CLS", "nDTW", "SDTW"})
    CHECK(report.contains(key));
  CHECK(report["split"] == "val_unseen");
  CHECK(report["n_episodes"] == 4);

  // Stage 2 without --ckpt or --base is rejected up front.
  CHECK(run({"train", "--config", d.cfg(), "--episodes", d.path("eps.jsonl"),
             "--stage", "2", "--out", d.path("x.ckpt")}).rc != 0);
  CHECK(run({"train", "--config", d.cfg(), "--episodes", d.path("eps.jsonl"),
             "--stage", "2", "--ckpt", d.path("s1.ckpt"), "--out",
             d.path("x.ckpt")}).rc != 0);
}

TEST_CASE("cli oracle eval replays references and reports SR 100") {
  CliDir d;
  REQUIRE(run({"gen-episodes", "--config", d.cfg(), "--out",
               d.path("eps.jsonl")}).rc == 0);
  auto r = run({"eval", "--config", d.cfg(), "--episodes", d.path("eps.jsonl"),
                "--oracle", "--out", d.path("oracle.json")});
  REQUIRE(r.rc == 0);
  auto report = nlohmann::json::parse(read_file(d.path("oracle.json")));
  CHECK(report["SR"].get<double>() == 100.0);
  CHECK(report["NE"].get<double>() == 0.0);
  CHECK(report["nDTW"].get<double>() == 1.0);
  CHECK(report["split"] == "val_unseen");
  CHECK(r.out.find("SR=100") != std::string::npos);
}

TEST_CASE("cli eval falls back to all episodes when no val split exists") {
  CliDir d;
  REQUIRE(run({"gen-episodes", "--config", d.cfg(), "--out",
               d.path("eps.jsonl")}).rc == 0);
  // Keep only training episodes.
  auto eps = episodes_from_jsonl(read_file(d.path("eps.jsonl")));
  std::vector<Episode> train;
  for (const auto& e : eps)
    if (e.split == "train") train.push_back(e);
  atomic_write_file(d.path("train_only.jsonl"), episodes_to_jsonl(train));

  auto r = run({"eval", "--config", d.cfg(), "--episodes",
                d.path("train_only.jsonl"), "--oracle", "--out",
                d.path("rep.json")});
  REQUIRE(r.rc == 0);
  auto report = nlohmann::json::parse(read_file(d.path("rep.json")));
  CHECK(report["split"] == "all");
  CHECK(report["n_episodes"] == 12);
}

TEST_CASE("cli inspect-prompts surfaces matching phrases with similarities") {
  CliDir d;
  d.make_data();

  auto r = run({"inspect-prompts", "--config", d.cfg(), "--base",
                d.path("base.jsonl"), "--instruction",
                "walk through the kitchen"});
  REQUIRE(r.rc == 0);
  std::istringstream out(r.out);
  std::string header, top;
  REQUIRE(std::getline(out, header));
  REQUIRE(std::getline(out, top));
  // Top-ranked prompt was harvested from a kitchen phrase; an exact duplicate
  // of the query phrase in the base scores a rounded 1.000.
  CHECK(top.find("kitchen") != std::string::npos);
  CHECK(top.find("sim=1.000") != std::string::npos);
  CHECK(top.find("labels=[") != std::string::npos);

  // Only as many rows as retrieved prompts: padded slots never print.
  auto wide = run({"inspect-prompts", "--config", d.cfg(), "--base",
                   d.path("base.jsonl"), "--instruction",
                   "walk through the kitchen", "--nmax", "60"});
  REQUIRE(wide.rc == 0);
  std::istringstream wout(wide.out);
  int rows = 0;
  std::string line;
  REQUIRE(std::getline(wout, line));  // header
  int advertised = std::stoi(line.substr(0, line.find(' ')));
  while (std::getline(wout, line)) ++rows;
  CHECK(rows == advertised);
  CHECK(rows < 60);
  CHECK(rows >= 1);
}

TEST_CASE("cli inspect-prompts reports zero retrievals for phrase-free input") {
  CliDir d;
  d.make_data();
  auto r = run({"inspect-prompts", "--config", d.cfg(), "--base",
                d.path("base.jsonl"), "--instruction", "the the the"});
  REQUIRE(r.rc == 0);
  CHECK(r.out == "0 prompts retrieved\n");
}

TEST_CASE("cli rejects prompt base whose encoder differs from the config") {
  CliDir d;
  d.make_data();
  atomic_write_file(d.path("other.cfg"),
                    read_file(d.cfg()) + "encoder.seed = 4242\n");
  auto s1 = run({"train", "--config", d.path("other.cfg"), "--episodes",
                 d.path("eps.jsonl"), "--stage", "1", "--out",
                 d.path("o1.ckpt")});
  REQUIRE(s1.rc == 0);
  auto s2 = run({"train", "--config", d.path("other.cfg"), "--episodes",
                 d.path("eps.jsonl"), "--stage", "2", "--ckpt",
                 d.path("o1.ckpt"), "--base", d.path("base.jsonl"), "--out",
                 d.path("o2.ckpt")});
  CHECK(s2.rc != 0);
  CHECK(s2.err.find("error:") == 0);
}
