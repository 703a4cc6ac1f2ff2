#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splash/dataio.h"
#include "splash/engine.h"

namespace splash {

// Collapsed Gibbs sampling for LDA with oversampling: each word occurrence
// independently draws `oversample` topics, each carrying 1/oversample of the
// word's weight. To keep the count identities exact in floating point, all
// counters are stored scaled by `oversample` (so every instant add is the
// integer +m and every executed delayed add is the integer -1); the sampling
// probabilities and the evaluation divide the scale back out.
struct LdaModel {
  uint32_t topics = 20;   // K
  uint32_t vocab = 1000;  // W
  double alpha = 0.1;
  double beta = 0.1;
  int oversample = 10;  // q

  std::string word_topic_key = "nwk";  // length W * K, index w * K + k
  std::string topic_key = "nk";        // length K
  std::string doc_key(uint32_t d) const { return "d:" + std::to_string(d); }
  std::string local_topics_key = "z";

  double scale() const { return static_cast<double>(oversample); }
};

ProcessFn make_lda_process(LdaModel model);

// Declares the word-topic, topic, and per-document counters (all zero).
void declare_lda_state(ParamDataset& ds, const LdaModel& model,
                       uint32_t num_docs);

// Normalized topic distribution for one (doc, word) pair against the current
// replica counts; negative transients are clamped to zero in the numerator
// terms only.
std::vector<double> lda_topic_probabilities(const LdaModel& model,
                                            SharedVars& shared, uint32_t doc,
                                            uint32_t word);

// Expands a 1-based corpus into 0-based single-occurrence token elements.
std::vector<Element> lda_tokens_from_corpus(const Corpus& corpus);

// phi_{k,w} = (n_wk + beta) / (n_k + beta W) from the (scaled) counters.
std::vector<std::vector<double>> lda_topic_word_distributions(
    const LdaModel& model, VarStore& vars);

struct LdaTestDoc {
  std::vector<uint32_t> observed;  // word ids, one entry per occurrence
  std::vector<uint32_t> heldout;
};

// Builds fold-in evaluation docs from 1-based (word, count) lists, splitting
// each document's unique words into disjoint observed and held-out halves.
std::vector<LdaTestDoc> lda_make_test_docs(
    const std::vector<std::vector<std::pair<uint32_t, uint32_t>>>& docs,
    uint64_t seed);

// Average predictive log-likelihood per held-out word: theta_d is estimated
// from the observed words by `foldin_sweeps` Gibbs sweeps holding phi fixed,
// then the score is mean log sum_k theta_dk phi_kw over held-out
// occurrences. Documents with no observed words are skipped with a warning.
double lda_predictive_loglik(const LdaModel& model, VarStore& vars,
                             const std::vector<LdaTestDoc>& docs,
                             uint64_t seed, int foldin_sweeps = 20);

}  // namespace splash
