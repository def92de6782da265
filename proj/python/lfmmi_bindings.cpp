// python/lfmmi_bindings.cpp
//
// pybind11 module exposing the main lfmmi operations. Emission matrices
// cross the boundary as T x P numpy float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lfmmi/alignment_score.hpp"
#include "lfmmi/decoders.hpp"
#include "lfmmi/forward.hpp"
#include "lfmmi/graphs.hpp"
#include "lfmmi/nbest.hpp"
#include "lfmmi/prefix_score.hpp"

namespace py = pybind11;
using namespace lfmmi;

namespace {

EmissionMatrix emissions_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("emissions: expected a T x P array");
  int frames = static_cast<int>(arr.shape(0));
  int units = static_cast<int>(arr.shape(1));
  std::vector<double> values(arr.data(), arr.data() + static_cast<size_t>(frames) * units);
  EmissionMatrix e(frames, units, std::move(values));
  e.check_finite_or_log_zero();
  return e;
}

py::array_t<double> matrix_to_array(const std::vector<double>& values, int frames, int units) {
  py::array_t<double> arr({frames, units});
  std::copy(values.begin(), values.end(), arr.mutable_data());
  return arr;
}

py::dict nbest_to_dict(const NBestList& list) {
  py::dict d;
  d["utt_id"] = list.utt_id;
  d["warning"] = list.warning;
  py::list entries;
  for (const NBestEntry& e : list.entries) {
    py::dict en;
    en["tokens"] = e.tokens;
    en["total"] = e.total;
    en["breakdown"] = e.breakdown;
    entries.append(en);
  }
  d["entries"] = entries;
  return d;
}

NBestList nbest_from_dict(const py::dict& d) {
  NBestList list;
  list.utt_id = d.contains("utt_id") ? d["utt_id"].cast<std::string>() : "utt";
  if (d.contains("warning")) list.warning = d["warning"].cast<bool>();
  for (const auto& item : d["entries"].cast<py::list>()) {
    py::dict en = item.cast<py::dict>();
    NBestEntry entry;
    entry.tokens = en["tokens"].cast<std::vector<std::string>>();
    entry.total = en["total"].cast<double>();
    if (en.contains("breakdown"))
      entry.breakdown = en["breakdown"].cast<std::map<std::string, double>>();
    list.entries.push_back(std::move(entry));
  }
  return list;
}

// The library scorers and emission-derived providers hold references to
// their inputs; the python-facing wrappers own copies so lifetimes follow
// the python object.
struct PyPrefixScorer {
  Fsa den;
  EmissionMatrix e;
  Lexicon lex;
  std::unique_ptr<PrefixScorer> inner;

  PyPrefixScorer(const Fsa& den_in, py::array_t<double> e_in, const Lexicon& lex_in)
      : den(den_in), e(emissions_from_array(std::move(e_in))), lex(lex_in) {
    inner = std::make_unique<PrefixScorer>(den, e, lex);
  }
};

struct PyAlignmentScorer {
  Fsa den;
  EmissionMatrix e;
  Lexicon lex;
  std::unique_ptr<AlignmentScorer> inner;

  PyAlignmentScorer(const Fsa& den_in, py::array_t<double> e_in, const Lexicon& lex_in,
                    int lookahead)
      : den(den_in), e(emissions_from_array(std::move(e_in))), lex(lex_in) {
    inner = std::make_unique<AlignmentScorer>(den, e, lex, lookahead);
  }
};

struct PyTableAedProvider : AedScoreProvider {
  Vocabulary vocab;
  std::unique_ptr<TableAedProvider> inner;

  PyTableAedProvider(Vocabulary v, std::map<std::string, std::map<std::string, double>> t)
      : vocab(std::move(v)) {
    inner = std::make_unique<TableAedProvider>(vocab, std::move(t));
  }
  std::vector<double> log_posteriors(const std::vector<int>& prefix) const override {
    return inner->log_posteriors(prefix);
  }
};

struct PyTableNtProvider : NtScoreProvider {
  Vocabulary vocab;
  std::unique_ptr<TableNtProvider> inner;

  PyTableNtProvider(Vocabulary v, std::map<std::string, std::map<std::string, double>> t)
      : vocab(std::move(v)) {
    inner = std::make_unique<TableNtProvider>(vocab, std::move(t));
  }
  std::vector<double> log_posteriors(const std::vector<int>& prefix, int t) const override {
    return inner->log_posteriors(prefix, t);
  }
};

struct PyCtcPrefixAedProvider : AedScoreProvider {
  Vocabulary vocab;
  Lexicon lex;
  EmissionMatrix e;
  std::unique_ptr<CtcPrefixAedProvider> inner;

  PyCtcPrefixAedProvider(Vocabulary v, Lexicon l, py::array_t<double> e_in)
      : vocab(std::move(v)), lex(std::move(l)), e(emissions_from_array(std::move(e_in))) {
    inner = std::make_unique<CtcPrefixAedProvider>(vocab, lex, e);
  }
  std::vector<double> log_posteriors(const std::vector<int>& prefix) const override {
    return inner->log_posteriors(prefix);
  }
};

struct PyEmissionNtProvider : NtScoreProvider {
  Vocabulary vocab;
  Lexicon lex;
  EmissionMatrix e;
  std::unique_ptr<EmissionNtProvider> inner;

  PyEmissionNtProvider(Vocabulary v, Lexicon l, py::array_t<double> e_in)
      : vocab(std::move(v)), lex(std::move(l)), e(emissions_from_array(std::move(e_in))) {
    inner = std::make_unique<EmissionNtProvider>(vocab, lex, e);
  }
  std::vector<double> log_posteriors(const std::vector<int>& prefix, int t) const override {
    return inner->log_posteriors(prefix, t);
  }
};

}  // namespace

PYBIND11_MODULE(_lfmmi, m) {
  m.doc() = "Lattice-free MMI scoring and decoding over externally supplied emissions";

  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<InfeasibleError>(m, "InfeasibleError");

  py::class_<Arc>(m, "Arc")
      .def(py::init<>())
      .def_readwrite("src", &Arc::src)
      .def_readwrite("dst", &Arc::dst)
      .def_readwrite("label", &Arc::label)
      .def_readwrite("weight", &Arc::weight)
      .def("__repr__", [](const Arc& a) {
        return "Arc(" + std::to_string(a.src) + " -> " + std::to_string(a.dst) +
               ", label=" + std::to_string(a.label) + ")";
      });

  py::class_<Fsa>(m, "Fsa")
      .def(py::init<>())
      .def_readwrite("num_states", &Fsa::num_states)
      .def_readwrite("start_state", &Fsa::start_state)
      .def_readwrite("arcs", &Fsa::arcs)
      .def_readwrite("final_weights", &Fsa::final_weights)
      .def("add_state", &Fsa::add_state)
      .def("add_arc", &Fsa::add_arc)
      .def("set_final", &Fsa::set_final)
      .def("validate", &Fsa::validate, py::arg("num_units") = -1)
      .def("__eq__", [](const Fsa& a, const Fsa& b) { return a == b; });

  m.def("save_fsa", py::overload_cast<const Fsa&, const std::string&>(&save_fsa));
  m.def("load_fsa", py::overload_cast<const std::string&>(&load_fsa));

  py::class_<Lexicon>(m, "Lexicon")
      .def_readonly("phones", &Lexicon::phones)
      .def_readonly("tokens", &Lexicon::tokens)
      .def_readonly("pronunciations", &Lexicon::pronunciations)
      .def_readonly("silence_phone", &Lexicon::silence_phone)
      .def_readonly("silence_prob", &Lexicon::silence_prob)
      .def_property_readonly("num_units", &Lexicon::num_units)
      .def("token_id", &Lexicon::token_id)
      .def("phone_id", &Lexicon::phone_id)
      .def("expand", [](const Lexicon& lex, const std::vector<int>& ids) {
        return lex.expand(ids);
      });

  m.def("compile_lexicon", &compile_lexicon, py::arg("text"),
        py::arg("silence_symbol") = "sil", py::arg("silence_prob") = 0.5);
  m.def("save_lexicon", py::overload_cast<const Lexicon&, const std::string&>(&save_lexicon));
  m.def("load_lexicon", py::overload_cast<const std::string&>(&load_lexicon));

  py::class_<BigramLm>(m, "BigramLm")
      .def_readonly("num_units", &BigramLm::num_units)
      .def_readonly("initial", &BigramLm::initial)
      .def_readonly("transitions", &BigramLm::transitions)
      .def("initial_log_prob", &BigramLm::initial_log_prob)
      .def("log_prob", &BigramLm::log_prob)
      .def("validate", &BigramLm::validate, py::arg("tol") = 1e-6);

  m.def("estimate_phone_bigram", &estimate_phone_bigram);
  m.def("bigram_to_json", &bigram_to_json);
  m.def("bigram_from_json", &bigram_from_json);

  m.def("ctc_collapse", [](const std::vector<int>& labels) { return ctc_collapse(labels); });
  m.def("expand_ctc", &expand_ctc);
  m.def("build_ctc_topology", &build_ctc_topology);
  m.def("build_numerator_graph", [](const std::vector<int>& token_ids, const Lexicon& lex) {
    return build_numerator_graph(token_ids, lex);
  });
  m.def("build_denominator_graph", &build_denominator_graph);

  m.def("save_emissions", [](py::array_t<double> values, const std::string& path) {
    save_emissions(emissions_from_array(values), path);
  });
  m.def(
      "load_emissions",
      [](const std::string& path, bool check_normalized) {
        EmissionMatrix e = load_emissions(path, check_normalized);
        return matrix_to_array(e.values(), e.frames(), e.units());
      },
      py::arg("path"), py::arg("check_normalized") = true);

  m.def("forward_score", [](const Fsa& g, py::array_t<double> e) {
    return forward_score(g, emissions_from_array(e));
  });
  m.def("forward_prefix_series", [](const Fsa& g, py::array_t<double> e) {
    return forward_prefix_series(g, emissions_from_array(e));
  });
  m.def("occupation_posteriors", [](const Fsa& g, py::array_t<double> e) {
    EmissionMatrix em = emissions_from_array(e);
    return matrix_to_array(occupation_posteriors(g, em), em.frames(), em.units());
  });
  m.def("lfmmi_objective_and_grad",
        [](const Fsa& num, const Fsa& den, py::array_t<double> e) {
          EmissionMatrix em = emissions_from_array(e);
          LfmmiResult r = lfmmi_objective_and_grad(num, den, em);
          return py::make_tuple(r.objective,
                                matrix_to_array(r.gradient, em.frames(), em.units()));
        });

  py::enum_<ObjectiveKind>(m, "ObjectiveKind")
      .value("AED", ObjectiveKind::kAed)
      .value("NT", ObjectiveKind::kNt);
  m.def("combine_training_objectives",
        py::overload_cast<ObjectiveKind, double, const std::map<std::string, double>&>(
            &combine_training_objectives));
  m.def("combine_training_objectives",
        py::overload_cast<ObjectiveKind, const std::map<std::string, double>&>(
            &combine_training_objectives));

  py::class_<PrefixScorer::Entry>(m, "PrefixEntry")
      .def_readonly("tokens", &PrefixScorer::Entry::tokens)
      .def_readonly("num_series", &PrefixScorer::Entry::num_series)
      .def_readonly("score", &PrefixScorer::Entry::score);

  py::class_<PyPrefixScorer>(m, "PrefixScorer")
      .def(py::init<const Fsa&, py::array_t<double>, const Lexicon&>(), py::arg("den"),
           py::arg("emissions"), py::arg("lexicon"))
      .def("start", [](const PyPrefixScorer& s) { return *s.inner->start(); })
      .def("extend",
           [](const PyPrefixScorer& s, const PrefixScorer::Entry& parent, int token_id) {
             auto [delta, child] = s.inner->extend(parent, token_id);
             return std::make_pair(delta, *child);
           })
      .def("prefix_score",
           [](const PyPrefixScorer& s, const std::vector<int>& tokens) {
             return s.inner->prefix_score(tokens);
           })
      .def("make_entry",
           [](const PyPrefixScorer& s, std::vector<int> tokens) {
             return *s.inner->make_entry(std::move(tokens));
           })
      .def("complete_score",
           [](const PyPrefixScorer& s, const PrefixScorer::Entry& entry) {
             return s.inner->complete_score(entry);
           })
      .def("denominator_series",
           [](const PyPrefixScorer& s) { return s.inner->denominator_series(); })
      .def("denominator_forward_count",
           [](const PyPrefixScorer& s) { return s.inner->denominator_forward_count(); })
      .def_property_readonly("frames",
                             [](const PyPrefixScorer& s) { return s.inner->frames(); });

  py::class_<AlignmentScorer::Entry>(m, "AlignmentEntry")
      .def_readonly("tokens", &AlignmentScorer::Entry::tokens)
      .def_readonly("ratio", &AlignmentScorer::Entry::ratio);

  py::class_<PyAlignmentScorer>(m, "AlignmentScorer")
      .def(py::init<const Fsa&, py::array_t<double>, const Lexicon&, int>(), py::arg("den"),
           py::arg("emissions"), py::arg("lexicon"),
           py::arg("lookahead") = kDefaultLookahead)
      .def("start", [](const PyAlignmentScorer& s) { return *s.inner->start(); })
      .def("make_entry",
           [](const PyAlignmentScorer& s, std::vector<int> tokens) {
             return *s.inner->make_entry(std::move(tokens));
           })
      .def("score",
           [](const PyAlignmentScorer& s, const AlignmentScorer::Entry& entry, int t) {
             return s.inner->score(entry, t);
           })
      .def("blank_delta",
           [](const PyAlignmentScorer& s, const AlignmentScorer::Entry& entry, int t) {
             return s.inner->blank_delta(entry, t);
           })
      .def("token_delta",
           [](const PyAlignmentScorer& s, const AlignmentScorer::Entry& entry, int token_id,
              int t) {
             auto [delta, child] = s.inner->token_delta(entry, token_id, t);
             return std::make_pair(delta, *child);
           })
      .def_property_readonly("lookahead",
                             [](const PyAlignmentScorer& s) { return s.inner->lookahead(); })
      .def_property_readonly("frames",
                             [](const PyAlignmentScorer& s) { return s.inner->frames(); })
      .def("denominator_forward_count", [](const PyAlignmentScorer& s) {
        return s.inner->denominator_forward_count();
      });

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<std::vector<std::string>>())
      .def_property_readonly("size", &Vocabulary::size)
      .def("sos", &Vocabulary::sos)
      .def("eos", &Vocabulary::eos)
      .def("blank", &Vocabulary::blank)
      .def("name", &Vocabulary::name)
      .def("find", &Vocabulary::find);

  py::class_<AedScoreProvider>(m, "AedScoreProvider");
  py::class_<NtScoreProvider>(m, "NtScoreProvider");

  py::class_<PyTableAedProvider, AedScoreProvider>(m, "TableAedProvider")
      .def(py::init<Vocabulary, std::map<std::string, std::map<std::string, double>>>())
      .def("log_posteriors", &PyTableAedProvider::log_posteriors);
  py::class_<PyTableNtProvider, NtScoreProvider>(m, "TableNtProvider")
      .def(py::init<Vocabulary, std::map<std::string, std::map<std::string, double>>>())
      .def("log_posteriors", &PyTableNtProvider::log_posteriors);
  py::class_<PyCtcPrefixAedProvider, AedScoreProvider>(m, "CtcPrefixAedProvider")
      .def(py::init<Vocabulary, Lexicon, py::array_t<double>>())
      .def("log_posteriors", &PyCtcPrefixAedProvider::log_posteriors);
  py::class_<PyEmissionNtProvider, NtScoreProvider>(m, "EmissionNtProvider")
      .def(py::init<Vocabulary, Lexicon, py::array_t<double>>())
      .def("log_posteriors", &PyEmissionNtProvider::log_posteriors);

  m.def(
      "aed_beam_search",
      [](const AedScoreProvider* att, const AedScoreProvider* ctc,
         const PyPrefixScorer* mmi, const Vocabulary& vocab, int frames, double beta_att,
         double beta_ctc, double beta_mmi, int beam, int nbest, int max_len,
         const std::string& utt_id) {
        AedSearchConfig cfg;
        cfg.beta_att = beta_att;
        cfg.beta_ctc = beta_ctc;
        cfg.beta_mmi = beta_mmi;
        cfg.beam = beam;
        cfg.nbest = nbest;
        cfg.max_len = max_len;
        return nbest_to_dict(aed_beam_search(att, ctc, mmi ? mmi->inner.get() : nullptr,
                                             vocab, frames, cfg, utt_id));
      },
      py::arg("att"), py::arg("ctc"), py::arg("mmi"), py::arg("vocab"), py::arg("frames"),
      py::arg("beta_att") = 1.0, py::arg("beta_ctc") = 0.0, py::arg("beta_mmi") = 0.2,
      py::arg("beam") = 10, py::arg("nbest") = 0, py::arg("max_len") = 0,
      py::arg("utt_id") = "utt");

  m.def(
      "nt_beam_search",
      [](const NtScoreProvider& provider, const PyAlignmentScorer* mmi,
         const Vocabulary& vocab, int frames, double beta_mmi, int beam, int nbest,
         int u_max, const std::string& utt_id) {
        NtSearchConfig cfg;
        cfg.beta_mmi = beta_mmi;
        cfg.beam = beam;
        cfg.nbest = nbest;
        cfg.u_max = u_max;
        return nbest_to_dict(nt_beam_search(provider, mmi ? mmi->inner.get() : nullptr,
                                            vocab, frames, cfg, utt_id));
      },
      py::arg("provider"), py::arg("mmi"), py::arg("vocab"), py::arg("frames"),
      py::arg("beta_mmi") = 0.2, py::arg("beam") = 10, py::arg("nbest") = 0,
      py::arg("u_max") = 0, py::arg("utt_id") = "utt");

  m.def("lfmmi_rescore", [](const py::dict& nbest, py::array_t<double> e,
                            const Lexicon& lex, double lambda_mmi) {
    return nbest_to_dict(
        lfmmi_rescore(nbest_from_dict(nbest), emissions_from_array(e), lex, lambda_mmi));
  });

  m.def("edit_distance", [](const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
    return edit_distance(a, b);
  });
  m.def("edit_distance_ids",
        [](const std::vector<int>& a, const std::vector<int>& b) {
          return edit_distance(a, b);
        });

  m.def(
      "approx_bayesian_risk",
      [](const std::vector<std::pair<double, double>>& posterior_risk, double epsilon) {
        return approx_bayesian_risk(posterior_risk, epsilon);
      },
      py::arg("posterior_risk"), py::arg("epsilon") = kDefaultMbrEpsilon);
  m.def(
      "nbest_bayesian_risk",
      [](const py::dict& nbest, const std::vector<std::string>& reference, double epsilon) {
        return approx_bayesian_risk(nbest_from_dict(nbest), reference, epsilon);
      },
      py::arg("nbest"), py::arg("reference"), py::arg("epsilon") = kDefaultMbrEpsilon);

  m.attr("LOG_ZERO") = kLogZero;
  m.attr("DEFAULT_LOOKAHEAD") = kDefaultLookahead;
  m.attr("DEFAULT_AED_ALPHA") = kDefaultAedAlpha;
  m.attr("DEFAULT_NT_ALPHA") = kDefaultNtAlpha;
  m.attr("__version__") = "0.1.0";
}
