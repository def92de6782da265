// tests/unit_cli.cpp
//
// Drives the lfmmi binary (path in $LFMMI_CLI) through the command surface:
// exit codes, output formats, idempotence, and the zero-weight identities.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lfmmi/decoders.hpp"
#include "lfmmi/forward.hpp"
#include "lfmmi/graphs.hpp"

using namespace lfmmi;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* env = std::getenv("LFMMI_CLI");
  REQUIRE_MESSAGE(env != nullptr, "LFMMI_CLI must point at the lfmmi binary");
  return env;
}

int run(const std::string& args, const fs::path& dir, const std::string& log = "log.txt") {
  std::string cmd = cli() + " " + args + " > " + (dir / log).string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& name) {
    dir = fs::temp_directory_path() / "lfmmi_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
  }

  fs::path file(const std::string& name, const std::string& content) {
    fs::path p = dir / name;
    std::ofstream(p) << content;
    return p;
  }
};

EmissionMatrix planted(const Lexicon& lex, const std::vector<int>& fp, double peak = 4.0) {
  EmissionMatrix e(static_cast<int>(fp.size()), lex.num_units(), 0.0);
  for (size_t t = 0; t < fp.size(); ++t) {
    e.at(static_cast<int>(t), fp[t]) = peak;
    double lse = kLogZero;
    for (int p = 0; p < lex.num_units(); ++p) lse = log_add(lse, e.at(static_cast<int>(t), p));
    for (int p = 0; p < lex.num_units(); ++p) e.at(static_cast<int>(t), p) -= lse;
  }
  return e;
}

const char* kLexicon = "phones: sil a b\nta a\ntb b\n";
const char* kTranscripts = "u1 ta tb\nu2 tb ta\n";

}  // namespace

TEST_CASE("compile-graphs is idempotent and validates input") {
  Workspace ws("compile");
  ws.file("lexicon.txt", kLexicon);
  ws.file("transcripts.txt", kTranscripts);

  std::string args = "compile-graphs --lexicon " + (ws.dir / "lexicon.txt").string() +
                     " --transcripts " + (ws.dir / "transcripts.txt").string() +
                     " --out-dir " + ws.dir.string();
  REQUIRE(run(args, ws.dir) == 0);
  std::string den1 = slurp(ws.dir / "den.lfsa");
  std::string lex1 = slurp(ws.dir / "lexicon.bin");
  std::string big1 = slurp(ws.dir / "bigram.json");
  CHECK_FALSE(den1.empty());

  // Re-run produces bit-identical artifacts.
  REQUIRE(run(args, ws.dir) == 0);
  CHECK(slurp(ws.dir / "den.lfsa") == den1);
  CHECK(slurp(ws.dir / "lexicon.bin") == lex1);
  CHECK(slurp(ws.dir / "bigram.json") == big1);

  // Artifacts round-trip through their loaders.
  Lexicon lex = load_lexicon((ws.dir / "lexicon.bin").string());
  CHECK(lex == compile_lexicon(kLexicon));
  Fsa den = load_fsa((ws.dir / "den.lfsa").string());
  BigramLm lm = bigram_from_json(big1);
  CHECK(den == build_denominator_graph(lm, lex.num_units()));

  // Missing phone header: exit code 2 with a message.
  ws.file("bad.txt", "ta a\n");
  CHECK(run("compile-graphs --lexicon " + (ws.dir / "bad.txt").string() +
                " --transcripts " + (ws.dir / "transcripts.txt").string() + " --out-dir " +
                ws.dir.string(),
            ws.dir, "bad.log") == 2);
  CHECK(slurp(ws.dir / "bad.log").find("phones:") != std::string::npos);

  // Unknown flag is a config error.
  CHECK(run("compile-graphs --no-such-flag", ws.dir, "flag.log") == 2);
}

TEST_CASE("score prints the objective with 9 decimals and a loadable gradient") {
  Workspace ws("score");
  ws.file("lexicon.txt", kLexicon);
  ws.file("transcripts.txt", kTranscripts);
  REQUIRE(run("compile-graphs --lexicon " + (ws.dir / "lexicon.txt").string() +
                  " --transcripts " + (ws.dir / "transcripts.txt").string() +
                  " --out-dir " + ws.dir.string(),
              ws.dir) == 0);
  Lexicon lex = load_lexicon((ws.dir / "lexicon.bin").string());
  Fsa den = load_fsa((ws.dir / "den.lfsa").string());

  auto e = planted(lex, {lex.phone_id("a"), lex.phone_id("a"), lex.phone_id("b"), 0});
  save_emissions(e, (ws.dir / "u1.lemi").string());

  std::string base = "score --lexicon " + (ws.dir / "lexicon.bin").string() + " --den " +
                     (ws.dir / "den.lfsa").string() + " --emissions " +
                     (ws.dir / "u1.lemi").string() + " --grad-out " +
                     (ws.dir / "u1.grad.lemi").string();
  REQUIRE(run(base + " --transcript \"ta tb\"", ws.dir, "score.json") == 0);

  std::string out = slurp(ws.dir / "score.json");
  CAPTURE(out);
  // {"objective": -d.ddddddddd, ...} with exactly 9 decimals.
  auto dot = out.find('.');
  REQUIRE(dot != std::string::npos);
  CHECK(out.substr(dot + 10, 1) == ",");

  // The gradient file reloads and matches the library computation.
  Fsa num = build_numerator_graph(
      std::vector<int>{lex.token_id("ta"), lex.token_id("tb")}, lex);
  LfmmiResult r = lfmmi_objective_and_grad(num, den, e);
  EmissionMatrix grad =
      load_emissions((ws.dir / "u1.grad.lemi").string(), /*check_normalized=*/false);
  REQUIRE(grad.frames() == e.frames());
  for (int t = 0; t < grad.frames(); ++t) {
    for (int p = 0; p < grad.units(); ++p) {
      CHECK(grad.at(t, p) ==
            doctest::Approx(r.gradient[t * e.units() + p]).epsilon(1e-6));  // f32 file
    }
  }

  // Infeasible numerator: transcript too long for T frames -> exit 3.
  CHECK(run(base + " --transcript \"ta ta ta ta\"", ws.dir, "inf.log") == 3);
  CHECK(slurp(ws.dir / "inf.log").find("numerator") != std::string::npos);

  // Passing the numerator graph itself as the denominator gives J = 0.
  save_fsa(num, (ws.dir / "num_as_den.lfsa").string());
  REQUIRE(run("score --lexicon " + (ws.dir / "lexicon.bin").string() + " --den " +
                  (ws.dir / "num_as_den.lfsa").string() + " --emissions " +
                  (ws.dir / "u1.lemi").string() + " --grad-out " +
                  (ws.dir / "zero.grad.lemi").string() + " --transcript \"ta tb\"",
              ws.dir, "zero.json") == 0);
  CHECK(slurp(ws.dir / "zero.json").find("\"objective\": 0.000000000") !=
        std::string::npos);

  // acoustic-scale 0 ignores the emissions entirely.
  auto other = planted(lex, {lex.phone_id("b"), lex.phone_id("b"), lex.phone_id("a"), 0});
  save_emissions(other, (ws.dir / "u2.lemi").string());
  REQUIRE(run(base + " --transcript \"ta tb\" --acoustic-scale 0", ws.dir, "s0a.json") == 0);
  std::string j0a = slurp(ws.dir / "s0a.json");
  std::string base2 = "score --lexicon " + (ws.dir / "lexicon.bin").string() + " --den " +
                      (ws.dir / "den.lfsa").string() + " --emissions " +
                      (ws.dir / "u2.lemi").string() + " --grad-out " +
                      (ws.dir / "u2.grad.lemi").string();
  REQUIRE(run(base2 + " --transcript \"ta tb\" --acoustic-scale 0", ws.dir, "s0b.json") == 0);
  std::string j0b = slurp(ws.dir / "s0b.json");
  CHECK(j0a.substr(0, j0a.find("grad_file")) == j0b.substr(0, j0b.find("grad_file")));
}

TEST_CASE("decode, rescore and mbr-risk over the CLI") {
  Workspace ws("decode");
  ws.file("lexicon.txt", kLexicon);
  ws.file("transcripts.txt", kTranscripts);
  REQUIRE(run("compile-graphs --lexicon " + (ws.dir / "lexicon.txt").string() +
                  " --transcripts " + (ws.dir / "transcripts.txt").string() +
                  " --out-dir " + ws.dir.string(),
              ws.dir) == 0);
  Lexicon lex = load_lexicon((ws.dir / "lexicon.bin").string());
  auto e = planted(lex, {lex.phone_id("a"), lex.phone_id("a"), lex.phone_id("b"),
                         lex.phone_id("b"), 0, 0});
  save_emissions(e, (ws.dir / "u1.lemi").string());

  std::string common = " --lexicon " + (ws.dir / "lexicon.bin").string() + " --den " +
                       (ws.dir / "den.lfsa").string() + " --emissions " +
                       (ws.dir / "u1.lemi").string() + " --utt-id u1 --beam 4 --u-max 3";

  // beta-mmi 0 decode equals a decode with no denominator attached at all.
  REQUIRE(run("decode-nt" + common + " --beta-mmi 0 --out " + (ws.dir / "a.nbest").string(),
              ws.dir) == 0);
  REQUIRE(run("decode-nt --lexicon " + (ws.dir / "lexicon.bin").string() +
                  " --emissions " + (ws.dir / "u1.lemi").string() +
                  " --utt-id u1 --beam 4 --u-max 3 --beta-mmi 0 --out " +
                  (ws.dir / "b.nbest").string(),
              ws.dir) == 0);
  CHECK(slurp(ws.dir / "a.nbest") == slurp(ws.dir / "b.nbest"));

  // The MMI decode finds the planted transcript.
  REQUIRE(run("decode-nt" + common + " --beta-mmi 0.2 --lookahead 3 --out " +
                  (ws.dir / "mmi.nbest").string(),
              ws.dir) == 0);
  auto lists = read_nbest((ws.dir / "mmi.nbest").string());
  REQUIRE(lists.size() == 1);
  CHECK(lists[0].entries[0].tokens == std::vector<std::string>{"ta", "tb"});

  // decode-aed runs with the emission-derived providers.
  REQUIRE(run("decode-aed --lexicon " + (ws.dir / "lexicon.bin").string() + " --den " +
                  (ws.dir / "den.lfsa").string() + " --emissions " +
                  (ws.dir / "u1.lemi").string() +
                  " --att emissions --beta-mmi 0.2 --beam 4 --out " +
                  (ws.dir / "aed.nbest").string(),
              ws.dir) == 0);
  auto aed_lists = read_nbest((ws.dir / "aed.nbest").string());
  CHECK(aed_lists[0].entries[0].tokens == std::vector<std::string>{"ta", "tb"});

  // decode-aed with a json table provider.
  ws.file("att.json", R"({
    "": {"ta": -0.510826, "tb": -1.203973, "<eos>": -2.302585},
    "ta": {"ta": -1.609438, "tb": -0.693147, "<eos>": -1.203973},
    "tb": {"ta": -0.693147, "tb": -1.609438, "<eos>": -1.203973},
    "ta ta": {"ta": -1.203973, "tb": -1.203973, "<eos>": -0.916291},
    "ta tb": {"ta": -2.302585, "tb": -2.302585, "<eos>": -0.223144},
    "tb ta": {"ta": -2.302585, "tb": -2.302585, "<eos>": -0.223144},
    "tb tb": {"ta": -1.203973, "tb": -1.203973, "<eos>": -0.916291}
  })");
  REQUIRE(run("decode-aed --lexicon " + (ws.dir / "lexicon.bin").string() +
                  " --emissions " + (ws.dir / "u1.lemi").string() +
                  " --att table --att-table " + (ws.dir / "att.json").string() +
                  " --beta-mmi 0 --beam 4 --max-len 3 --out " +
                  (ws.dir / "aed_table.nbest").string(),
              ws.dir) == 0);
  auto table_lists = read_nbest((ws.dir / "aed_table.nbest").string());
  CHECK(table_lists[0].entries[0].tokens == std::vector<std::string>{"ta", "tb"});

  // rescore with lambda 0 re-emits the input verbatim.
  REQUIRE(run("rescore --lexicon " + (ws.dir / "lexicon.bin").string() + " --nbest " +
                  (ws.dir / "mmi.nbest").string() + " --emissions " +
                  (ws.dir / "u1.lemi").string() + " --lambda-mmi 0 --out " +
                  (ws.dir / "same.nbest").string(),
              ws.dir) == 0);
  CHECK(slurp(ws.dir / "same.nbest") == slurp(ws.dir / "mmi.nbest"));

  REQUIRE(run("rescore --lexicon " + (ws.dir / "lexicon.bin").string() + " --nbest " +
                  (ws.dir / "mmi.nbest").string() + " --emissions " +
                  (ws.dir / "u1.lemi").string() + " --lambda-mmi 0.2 --out " +
                  (ws.dir / "rescored.nbest").string(),
              ws.dir) == 0);
  auto rescored = read_nbest((ws.dir / "rescored.nbest").string());
  CHECK(rescored[0].entries[0].breakdown.count("mmi_rescore") == 1);

  // mbr-risk on a self-referential 1-best reports 0.
  {
    NBestList one;
    one.utt_id = "u1";
    one.entries.push_back({{"ta", "tb"}, -0.2, {{"nt", -0.2}}});
    write_nbest({one}, (ws.dir / "one.nbest").string());
  }
  REQUIRE(run("mbr-risk --nbest " + (ws.dir / "one.nbest").string() +
                  " --reference \"ta tb\" --utt-id u1",
              ws.dir, "risk.json") == 0);
  CHECK(slurp(ws.dir / "risk.json").find("\"risk\": 0.000000000") != std::string::npos);
}

TEST_CASE("config file values are applied and flags override them") {
  Workspace ws("config");
  ws.file("lexicon.txt", kLexicon);
  ws.file("transcripts.txt", kTranscripts);
  REQUIRE(run("compile-graphs --lexicon " + (ws.dir / "lexicon.txt").string() +
                  " --transcripts " + (ws.dir / "transcripts.txt").string() +
                  " --out-dir " + ws.dir.string(),
              ws.dir) == 0);
  Lexicon lex = load_lexicon((ws.dir / "lexicon.bin").string());
  auto e = planted(lex, {lex.phone_id("a"), lex.phone_id("b"), 0, 0});
  save_emissions(e, (ws.dir / "u1.lemi").string());

  ws.file("decode.cfg", "[decode-nt]\nbeam=4\nu-max=2\nbeta-mmi=0\n");
  std::string stem = "decode-nt --config " + (ws.dir / "decode.cfg").string() +
                     " --lexicon " + (ws.dir / "lexicon.bin").string() + " --emissions " +
                     (ws.dir / "u1.lemi").string();
  REQUIRE(run(stem + " --out " + (ws.dir / "c1.nbest").string(), ws.dir) == 0);
  // The config's beam=4 applies; overriding --beam 1 changes the output.
  REQUIRE(run(stem + " --beam 1 --out " + (ws.dir / "c2.nbest").string(), ws.dir) == 0);
  auto c1 = read_nbest((ws.dir / "c1.nbest").string());
  auto c2 = read_nbest((ws.dir / "c2.nbest").string());
  CHECK(c1[0].entries.size() == 4);
  CHECK(c2[0].entries.size() == 1);
}
