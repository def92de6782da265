// tools/lfmmi_cli.cpp
//
// Command-line surface over the lfmmi library:
//   compile-graphs  lexicon + transcripts -> den.lfsa, lexicon.bin, bigram.json
//   score           LF-MMI objective and gradient for one utterance
//   decode-aed      label-synchronous beam search
//   decode-nt       frame-synchronous (ALSD) beam search
//   rescore         LF-MMI N-best rescoring
//   mbr-risk        approximated Bayesian risk of an N-best list
//
// Exit codes: 0 success, 2 input/config error, 3 infeasible objective.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "lfmmi/decoders.hpp"
#include "lfmmi/forward.hpp"
#include "lfmmi/graphs.hpp"

using namespace lfmmi;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string f;
  while (iss >> f) fields.push_back(f);
  return fields;
}

// `utt_id token token ...` lines.
std::vector<std::pair<std::string, std::vector<std::string>>> read_transcripts(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path);
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    std::vector<std::string> tokens(fields.begin() + 1, fields.end());
    out.emplace_back(fields[0], std::move(tokens));
  }
  if (out.empty()) throw ParseError(path + ": no transcripts");
  return out;
}

std::vector<int> tokens_to_ids(const std::vector<std::string>& tokens, const Lexicon& lex,
                               const std::string& context) {
  std::vector<int> ids;
  for (const auto& t : tokens) {
    int id = lex.token_id(t);
    if (id < 0) throw ParseError(context + ": token `" + t + "` is not in the lexicon");
    ids.push_back(id);
  }
  return ids;
}

struct UttInput {
  std::string utt_id;
  std::string emissions_path;
  std::string provider_path;  // empty = use emissions_path
};

// Manifest lines: `utt_id emissions_path [provider_emissions_path]`.
std::vector<UttInput> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path);
  std::vector<UttInput> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 2)
      throw ParseError(path + " line " + std::to_string(line_no) +
                       ": expected `utt_id emissions_path [provider_path]`");
    out.push_back({fields[0], fields[1], fields.size() > 2 ? fields[2] : ""});
  }
  if (out.empty()) throw ParseError(path + ": empty manifest");
  return out;
}

// Per-utterance work fanned out over a small pool; results keep input order.
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  int workers = std::min(jobs, n);
  for (int j = 0; j < workers; ++j) {
    pool.emplace_back([&]() {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct CommonDecodeArgs {
  std::string lexicon_path;
  std::string den_path;
  std::string emissions_path;
  std::string manifest_path;
  std::string utt_id = "utt";
  std::string out_path;
  int beam = 10;
  int nbest = 0;
  int jobs = 1;
  bool no_normalize_check = false;
};

void add_common_decode(CLI::App* cmd, CommonDecodeArgs& args) {
  cmd->add_option("--lexicon", args.lexicon_path, "compiled lexicon (lexicon.bin)")
      ->required();
  cmd->add_option("--den", args.den_path, "denominator graph (den.lfsa)");
  auto* e = cmd->add_option("--emissions", args.emissions_path,
                            "one utterance's emission matrix (.lemi)");
  auto* m = cmd->add_option("--emissions-list", args.manifest_path,
                            "manifest: utt_id emissions [provider emissions]");
  e->excludes(m);
  cmd->add_option("--utt-id", args.utt_id, "utterance id for --emissions mode");
  cmd->add_option("--out", args.out_path, "output n-best file")->required();
  cmd->add_option("--beam", args.beam, "beam size")->check(CLI::PositiveNumber);
  cmd->add_option("--nbest", args.nbest, "n-best size (default: beam)");
  cmd->add_option("--jobs", args.jobs, "parallel utterances")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-normalize-check", args.no_normalize_check,
                "skip the per-frame normalization check on load");
}

std::vector<UttInput> decode_inputs(const CommonDecodeArgs& args) {
  if (!args.manifest_path.empty()) return read_manifest(args.manifest_path);
  if (args.emissions_path.empty())
    throw ParseError("one of --emissions / --emissions-list is required");
  return {{args.utt_id, args.emissions_path, ""}};
}

Fsa load_denominator(const std::string& path, bool required) {
  if (path.empty()) {
    if (required) throw ParseError("--den is required when beta-mmi != 0");
    return Fsa{};
  }
  return load_fsa(path);
}

int main_impl(int argc, char** argv) {
  CLI::App app{"lattice-free MMI scoring and decoding toolkit"};
  app.require_subcommand(1);
  // key=value config file; keys live under the subcommand's [section].
  // Flags given on the command line override file values.
  app.set_config("--config", "", "key=value config file; flags override");
  app.fallthrough();

  // ---- compile-graphs ----
  auto* compile = app.add_subcommand("compile-graphs",
                                     "compile lexicon, bigram and denominator graph");
  std::string lexicon_text_path, transcripts_path, out_dir;
  std::string silence_symbol = "sil";
  double silence_prob = 0.5;
  compile->add_option("--lexicon", lexicon_text_path, "lexicon text file")->required();
  compile->add_option("--transcripts", transcripts_path, "utt_id token... lines")
      ->required();
  compile->add_option("--out-dir", out_dir, "output directory")->required();
  compile->add_option("--silence-symbol", silence_symbol, "optional-silence phone");
  compile->add_option("--silence-prob", silence_prob, "optional-silence probability")
      ->check(CLI::Range(0.0, 1.0));

  // ---- score ----
  auto* score = app.add_subcommand("score", "LF-MMI objective and gradient");
  std::string score_lexicon, score_den, score_emissions, score_transcript;
  std::string score_transcript_file, score_utt = "utt", grad_out;
  double acoustic_scale = 1.0;
  bool score_no_norm = false;
  score->add_option("--lexicon", score_lexicon)->required();
  score->add_option("--den", score_den)->required();
  score->add_option("--emissions", score_emissions)->required();
  score->add_option("--transcript", score_transcript, "space-separated tokens");
  score->add_option("--transcript-file", score_transcript_file,
                    "utt_id token... lines, selected by --utt-id");
  score->add_option("--utt-id", score_utt);
  score->add_option("--grad-out", grad_out, "gradient output (.lemi)")->required();
  score->add_option("--acoustic-scale", acoustic_scale)->check(CLI::NonNegativeNumber);
  score->add_flag("--no-normalize-check", score_no_norm);

  // ---- decode-aed ----
  auto* aed = app.add_subcommand("decode-aed", "label-synchronous beam search");
  CommonDecodeArgs aed_args;
  add_common_decode(aed, aed_args);
  std::string att_source = "emissions", ctc_source = "none", att_table_path;
  std::string aed_provider_emissions;
  AedSearchConfig aed_cfg;
  aed->add_option("--att", att_source, "attention source: emissions|table")
      ->check(CLI::IsMember({"emissions", "table"}));
  aed->add_option("--att-table", att_table_path, "table provider json");
  aed->add_option("--ctc", ctc_source, "ctc source: none|emissions")
      ->check(CLI::IsMember({"none", "emissions"}));
  aed->add_option("--provider-emissions", aed_provider_emissions,
                  "emissions feeding the providers (default: --emissions)");
  aed->add_option("--beta-att", aed_cfg.beta_att);
  aed->add_option("--beta-ctc", aed_cfg.beta_ctc);
  aed->add_option("--beta-mmi", aed_cfg.beta_mmi);
  aed->add_option("--max-len", aed_cfg.max_len, "hypothesis length cap (default: T)");

  // ---- decode-nt ----
  auto* nt = app.add_subcommand("decode-nt", "frame-synchronous (ALSD) beam search");
  CommonDecodeArgs nt_args;
  add_common_decode(nt, nt_args);
  std::string nt_source = "emissions", nt_table_path, nt_provider_emissions;
  NtSearchConfig nt_cfg;
  int lookahead = kDefaultLookahead;
  nt->add_option("--nt", nt_source, "transducer source: emissions|table")
      ->check(CLI::IsMember({"emissions", "table"}));
  nt->add_option("--nt-table", nt_table_path, "table provider json");
  nt->add_option("--provider-emissions", nt_provider_emissions,
                 "emissions feeding the provider (default: --emissions)");
  nt->add_option("--beta-mmi", nt_cfg.beta_mmi);
  nt->add_option("--lookahead", lookahead, "look-ahead steps tau")
      ->check(CLI::NonNegativeNumber);
  nt->add_option("--u-max", nt_cfg.u_max, "maximum token count (default: T)");

  // ---- rescore ----
  auto* rescore = app.add_subcommand("rescore", "LF-MMI n-best rescoring");
  std::string rs_lexicon, rs_nbest, rs_emissions, rs_manifest, rs_out;
  double lambda_mmi = 0.2;
  bool rs_no_norm = false;
  rescore->add_option("--lexicon", rs_lexicon)->required();
  rescore->add_option("--nbest", rs_nbest, "input n-best file")->required();
  rescore->add_option("--emissions", rs_emissions, "emissions for a single utterance");
  rescore->add_option("--emissions-list", rs_manifest, "manifest for multi-utterance input");
  rescore->add_option("--lambda-mmi", lambda_mmi);
  rescore->add_option("--out", rs_out)->required();
  rescore->add_flag("--no-normalize-check", rs_no_norm);

  // ---- mbr-risk ----
  auto* mbr = app.add_subcommand("mbr-risk", "approximated Bayesian risk report");
  std::string mbr_nbest, mbr_reference, mbr_references_file, mbr_utt = "utt";
  double epsilon = kDefaultMbrEpsilon;
  mbr->add_option("--nbest", mbr_nbest)->required();
  mbr->add_option("--reference", mbr_reference, "space-separated reference tokens");
  mbr->add_option("--references", mbr_references_file, "utt_id token... lines");
  mbr->add_option("--utt-id", mbr_utt, "utterance id for --reference mode");
  mbr->add_option("--epsilon", epsilon)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // config/flag errors exit 2
  }

  if (compile->parsed()) {
    Lexicon lex = compile_lexicon(slurp(lexicon_text_path), silence_symbol, silence_prob);
    auto transcripts = read_transcripts(transcripts_path);
    std::vector<std::vector<int>> token_ids;
    for (const auto& [utt, tokens] : transcripts)
      token_ids.push_back(tokens_to_ids(tokens, lex, transcripts_path + " utt " + utt));
    BigramLm lm = estimate_phone_bigram(token_ids, lex);
    Fsa den = build_denominator_graph(lm, lex.num_units());

    save_lexicon(lex, out_dir + "/lexicon.bin");
    save_fsa(den, out_dir + "/den.lfsa");
    std::ofstream bj(out_dir + "/bigram.json", std::ios::binary);
    if (!bj) throw ParseError("cannot open " + out_dir + "/bigram.json for writing");
    bj << bigram_to_json(lm, lex);
    std::printf("{\"lexicon\": \"%s\", \"den\": \"%s\", \"bigram\": \"%s\"}\n",
                (out_dir + "/lexicon.bin").c_str(), (out_dir + "/den.lfsa").c_str(),
                (out_dir + "/bigram.json").c_str());
    return 0;
  }

  if (score->parsed()) {
    Lexicon lex = load_lexicon(score_lexicon);
    Fsa den = load_fsa(score_den);
    EmissionMatrix e = load_emissions(score_emissions, !score_no_norm);

    std::vector<std::string> tokens;
    if (!score_transcript.empty()) {
      tokens = split_ws(score_transcript);
    } else if (!score_transcript_file.empty()) {
      bool found = false;
      for (const auto& [utt, toks] : read_transcripts(score_transcript_file)) {
        if (utt == score_utt) {
          tokens = toks;
          found = true;
          break;
        }
      }
      if (!found)
        throw ParseError(score_transcript_file + ": no transcript for utt `" +
                         score_utt + "`");
    } else {
      throw ParseError("one of --transcript / --transcript-file is required");
    }

    Fsa num = build_numerator_graph(tokens_to_ids(tokens, lex, "transcript"), lex);
    EmissionMatrix scaled = e.scaled(acoustic_scale);
    LfmmiResult r = lfmmi_objective_and_grad(num, den, scaled);
    save_emissions(EmissionMatrix(scaled.frames(), scaled.units(), r.gradient), grad_out);
    std::printf("{\"objective\": %.9f, \"grad_file\": \"%s\"}\n", r.objective,
                grad_out.c_str());
    return 0;
  }

  if (aed->parsed()) {
    Lexicon lex = load_lexicon(aed_args.lexicon_path);
    Vocabulary vocab(lex.tokens);
    Fsa den = load_denominator(aed_args.den_path, aed_cfg.beta_mmi != 0.0);
    auto inputs = decode_inputs(aed_args);
    aed_cfg.beam = aed_args.beam;
    aed_cfg.nbest = aed_args.nbest;
    if (att_source == "table" && att_table_path.empty())
      throw ParseError("--att table needs --att-table");

    std::optional<TableAedProvider> table_att;
    if (att_source == "table")
      table_att.emplace(TableAedProvider::from_json(vocab, slurp(att_table_path)));

    std::vector<NBestList> results(inputs.size());
    parallel_for(static_cast<int>(inputs.size()), aed_args.jobs, [&](int i) {
      const UttInput& in = inputs[i];
      EmissionMatrix e = load_emissions(in.emissions_path, !aed_args.no_normalize_check);
      std::string prov_path = !in.provider_path.empty() ? in.provider_path
                              : !aed_provider_emissions.empty() ? aed_provider_emissions
                                                                : in.emissions_path;
      EmissionMatrix prov = prov_path == in.emissions_path
                                ? e
                                : load_emissions(prov_path, !aed_args.no_normalize_check);

      std::optional<CtcPrefixAedProvider> emission_att, emission_ctc;
      const AedScoreProvider* att_p = nullptr;
      if (att_source == "table") {
        att_p = &*table_att;
      } else {
        emission_att.emplace(vocab, lex, prov);
        att_p = &*emission_att;
      }
      const AedScoreProvider* ctc_p = nullptr;
      if (ctc_source == "emissions") {
        emission_ctc.emplace(vocab, lex, prov);
        ctc_p = &*emission_ctc;
      }
      std::optional<PrefixScorer> mmi;
      if (aed_cfg.beta_mmi != 0.0) mmi.emplace(den, e, lex);
      results[i] = aed_beam_search(att_p, ctc_p, mmi ? &*mmi : nullptr, vocab,
                                   e.frames(), aed_cfg, in.utt_id);
    });
    write_nbest(results, aed_args.out_path);
    return 0;
  }

  if (nt->parsed()) {
    Lexicon lex = load_lexicon(nt_args.lexicon_path);
    Vocabulary vocab(lex.tokens);
    Fsa den = load_denominator(nt_args.den_path, nt_cfg.beta_mmi != 0.0);
    auto inputs = decode_inputs(nt_args);
    nt_cfg.beam = nt_args.beam;
    nt_cfg.nbest = nt_args.nbest;
    if (nt_source == "table" && nt_table_path.empty())
      throw ParseError("--nt table needs --nt-table");

    std::optional<TableNtProvider> table_nt;
    if (nt_source == "table")
      table_nt.emplace(TableNtProvider::from_json(vocab, slurp(nt_table_path)));

    std::vector<NBestList> results(inputs.size());
    parallel_for(static_cast<int>(inputs.size()), nt_args.jobs, [&](int i) {
      const UttInput& in = inputs[i];
      EmissionMatrix e = load_emissions(in.emissions_path, !nt_args.no_normalize_check);
      std::string prov_path = !in.provider_path.empty() ? in.provider_path
                              : !nt_provider_emissions.empty() ? nt_provider_emissions
                                                               : in.emissions_path;
      EmissionMatrix prov = prov_path == in.emissions_path
                                ? e
                                : load_emissions(prov_path, !nt_args.no_normalize_check);

      std::optional<EmissionNtProvider> emission_nt;
      const NtScoreProvider* nt_p = nullptr;
      if (nt_source == "table") {
        nt_p = &*table_nt;
      } else {
        emission_nt.emplace(vocab, lex, prov);
        nt_p = &*emission_nt;
      }
      std::optional<AlignmentScorer> mmi;
      if (nt_cfg.beta_mmi != 0.0) mmi.emplace(den, e, lex, lookahead);
      results[i] =
          nt_beam_search(*nt_p, mmi ? &*mmi : nullptr, vocab, e.frames(), nt_cfg, in.utt_id);
    });
    write_nbest(results, nt_args.out_path);
    return 0;
  }

  if (rescore->parsed()) {
    Lexicon lex = load_lexicon(rs_lexicon);
    auto lists = read_nbest(rs_nbest);
    std::map<std::string, std::string> emissions_by_utt;
    if (!rs_manifest.empty()) {
      for (const auto& in : read_manifest(rs_manifest))
        emissions_by_utt[in.utt_id] = in.emissions_path;
    }
    std::vector<NBestList> out(lists.size());
    for (size_t i = 0; i < lists.size(); ++i) {
      std::string path = rs_emissions;
      if (!rs_manifest.empty()) {
        auto it = emissions_by_utt.find(lists[i].utt_id);
        if (it == emissions_by_utt.end())
          throw ParseError("rescore: no emissions for utt `" + lists[i].utt_id + "`");
        path = it->second;
      }
      if (path.empty())
        throw ParseError("one of --emissions / --emissions-list is required");
      EmissionMatrix e = load_emissions(path, !rs_no_norm);
      out[i] = lfmmi_rescore(lists[i], e, lex, lambda_mmi);
    }
    write_nbest(out, rs_out);
    return 0;
  }

  if (mbr->parsed()) {
    auto lists = read_nbest(mbr_nbest);
    std::map<std::string, std::vector<std::string>> refs;
    if (!mbr_references_file.empty()) {
      for (const auto& [utt, tokens] : read_transcripts(mbr_references_file))
        refs[utt] = tokens;
    } else {
      // --reference may legitimately be an empty token sequence.
      refs[mbr_utt] = split_ws(mbr_reference);
    }
    for (const auto& list : lists) {
      auto it = refs.find(list.utt_id);
      if (it == refs.end())
        throw ParseError("mbr-risk: no reference for utt `" + list.utt_id + "`");
      double risk = approx_bayesian_risk(list, it->second, epsilon);
      std::printf("{\"utt_id\": \"%s\", \"risk\": %.9f}\n", list.utt_id.c_str(), risk);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "error (%s infeasible): %s\n", e.side().c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
