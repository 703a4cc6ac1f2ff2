#include "splash/lda.h"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "splash/rng.h"

namespace splash {

namespace {

const Token& as_token(const Element& elem) {
  const auto* t = std::get_if<Token>(&elem);
  if (!t) throw DataError("lda expects token elements");
  return *t;
}

}  // namespace

ProcessFn make_lda_process(LdaModel model) {
  if (model.oversample < 1)
    throw ConfigError("lda: oversample must be >= 1");
  return [model](const Element& elem, int weight, SharedVars& shared,
                 LocalVars& local, std::mt19937_64& rng) {
    const Token& token = as_token(elem);
    if (token.word >= model.vocab)
      throw DataError("lda: word id out of range");
    const uint32_t K = model.topics;
    const std::string dkey = model.doc_key(token.doc);
    const double m = static_cast<double>(weight);
    const int draws = model.oversample;

    std::vector<double> probs(K);
    std::vector<double> topics_drawn;
    topics_drawn.reserve(static_cast<size_t>(draws) * token.count);

    for (uint32_t occ = 0; occ < token.count; ++occ) {
      probs = lda_topic_probabilities(model, shared, token.doc, token.word);
      for (int s = 0; s < draws; ++s) {
        const uint32_t k =
            static_cast<uint32_t>(rng::sample_discrete(rng, probs));
        topics_drawn.push_back(static_cast<double>(k));
        const size_t wk = static_cast<size_t>(token.word) * K + k;
        shared.add(model.word_topic_key, wk, m);
        shared.add(dkey, k, m);
        shared.add(model.topic_key, k, m);
        shared.delayed_add(model.word_topic_key, wk, -m);
        shared.delayed_add(dkey, k, -m);
        shared.delayed_add(model.topic_key, k, -m);
      }
    }
    local.set(model.local_topics_key, std::move(topics_drawn));
  };
}

std::vector<double> lda_topic_probabilities(const LdaModel& model,
                                            SharedVars& shared, uint32_t doc,
                                            uint32_t word) {
  const uint32_t K = model.topics;
  const double q = model.scale();
  const double beta_w = model.beta * static_cast<double>(model.vocab);
  const std::string dkey = model.doc_key(doc);
  std::vector<double> probs(K);
  double total = 0.0;
  for (uint32_t k = 0; k < K; ++k) {
    // Weighted replicas can transiently under-count before the combine;
    // clamp to zero inside the sampling numerator only, never in storage.
    const double ndk = std::max(shared.get(dkey, k), 0.0) / q;
    const double nwk = std::max(
        shared.get(model.word_topic_key,
                   static_cast<size_t>(word) * K + k),
        0.0) / q;
    const double nk = shared.get(model.topic_key, k) / q;
    const double denom = nk + beta_w;
    if (!(denom > 0.0))
      throw NumericError("lda: nonpositive sampling denominator");
    probs[k] = (ndk + model.alpha) * (nwk + model.beta) / denom;
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<Element> lda_tokens_from_corpus(const Corpus& corpus) {
  std::vector<Element> out;
  for (const auto& t : corpus.triples) {
    if (t.doc < 1 || t.word < 1)
      throw DataError("corpus triples must be 1-based");
    for (uint32_t c = 0; c < t.count; ++c)
      out.emplace_back(Token{t.doc - 1, t.word - 1, 1});
  }
  if (out.empty()) throw DataError("corpus has no tokens");
  return out;
}

std::vector<LdaTestDoc> lda_make_test_docs(
    const std::vector<std::vector<std::pair<uint32_t, uint32_t>>>& docs,
    uint64_t seed) {
  std::vector<LdaTestDoc> out;
  out.reserve(docs.size());
  for (size_t d = 0; d < docs.size(); ++d) {
    std::vector<uint32_t> unique_words;
    for (const auto& [word, count] : docs[d]) {
      (void)count;
      unique_words.push_back(word - 1);  // corpus words are 1-based
    }
    auto g = rng::make_engine(seed, {0x1e57, d});
    rng::shuffle(unique_words, g);
    const size_t obs_count = unique_words.size() / 2;
    LdaTestDoc doc;
    for (const auto& [word, count] : docs[d]) {
      const uint32_t w0 = word - 1;
      const auto pos =
          std::find(unique_words.begin(), unique_words.end(), w0) -
          unique_words.begin();
      auto& side = static_cast<size_t>(pos) < obs_count ? doc.observed
                                                        : doc.heldout;
      for (uint32_t c = 0; c < count; ++c) side.push_back(w0);
    }
    out.push_back(std::move(doc));
  }
  return out;
}

void declare_lda_state(ParamDataset& ds, const LdaModel& model,
                       uint32_t num_docs) {
  const size_t wk_len =
      static_cast<size_t>(model.vocab) * model.topics;
  ds.declare_array(model.word_topic_key, std::vector<double>(wk_len, 0.0));
  ds.declare_array(model.topic_key,
                   std::vector<double>(model.topics, 0.0));
  for (uint32_t d = 0; d < num_docs; ++d)
    ds.declare_array(model.doc_key(d),
                     std::vector<double>(model.topics, 0.0));
}

std::vector<std::vector<double>> lda_topic_word_distributions(
    const LdaModel& model, VarStore& vars) {
  const uint32_t K = model.topics;
  const uint32_t W = model.vocab;
  const double q = model.scale();
  const double beta_w = model.beta * static_cast<double>(W);
  const std::vector<double>& nwk = vars.get_array(model.word_topic_key);
  const std::vector<double>& nk = vars.get_array(model.topic_key);
  std::vector<std::vector<double>> phi(K, std::vector<double>(W));
  for (uint32_t k = 0; k < K; ++k) {
    const double denom = nk[k] / q + beta_w;
    for (uint32_t w = 0; w < W; ++w)
      phi[k][w] = (nwk[static_cast<size_t>(w) * K + k] / q + model.beta) /
                  denom;
  }
  return phi;
}

double lda_predictive_loglik(const LdaModel& model, VarStore& vars,
                             const std::vector<LdaTestDoc>& docs,
                             uint64_t seed, int foldin_sweeps) {
  const uint32_t K = model.topics;
  const auto phi = lda_topic_word_distributions(model, vars);

  double total = 0.0;
  size_t heldout_words = 0;
  std::vector<double> probs(K);

  for (size_t di = 0; di < docs.size(); ++di) {
    const LdaTestDoc& doc = docs[di];
    if (doc.heldout.empty()) continue;
    if (doc.observed.empty()) {
      std::cerr << "lda eval: test document " << di
                << " has no observed words, skipped\n";
      continue;
    }
    auto g = rng::make_engine(seed, {0x1da0, di});
    std::vector<uint32_t> assign(doc.observed.size(), 0);
    std::vector<double> ndk(K, 0.0);

    for (int sweep = 0; sweep < foldin_sweeps; ++sweep) {
      for (size_t i = 0; i < doc.observed.size(); ++i) {
        const uint32_t w = doc.observed[i];
        if (w >= model.vocab) throw DataError("lda eval: word id out of range");
        if (sweep > 0) ndk[assign[i]] -= 1.0;
        for (uint32_t k = 0; k < K; ++k)
          probs[k] = (ndk[k] + model.alpha) * phi[k][w];
        const uint32_t k =
            static_cast<uint32_t>(rng::sample_discrete(g, probs));
        assign[i] = k;
        ndk[k] += 1.0;
      }
    }

    const double denom =
        static_cast<double>(doc.observed.size()) + K * model.alpha;
    std::vector<double> theta(K);
    for (uint32_t k = 0; k < K; ++k) theta[k] = (ndk[k] + model.alpha) / denom;

    for (uint32_t w : doc.heldout) {
      if (w >= model.vocab) throw DataError("lda eval: word id out of range");
      double p = 0.0;
      for (uint32_t k = 0; k < K; ++k) p += theta[k] * phi[k][w];
      total += std::log(p);
      ++heldout_words;
    }
  }
  if (heldout_words == 0)
    throw UsageError("lda eval: no held-out words to score");
  return total / static_cast<double>(heldout_words);
}

}  // namespace splash
