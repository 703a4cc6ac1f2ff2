#include "splash/lda.h"

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "splash/rng.h"
#include "test_util.h"

using namespace splash;

namespace {

// Engine dataset over a corpus, documents kept whole per partition.
ParamDataset lda_dataset(const Corpus& corpus, const LdaModel& model,
                         uint32_t partitions, uint64_t seed) {
  auto ds = ParamDataset::create_grouped(
      lda_tokens_from_corpus(corpus),
      [](const Element& e) { return uint64_t(std::get<Token>(e).doc); },
      partitions, seed);
  declare_lda_state(ds, model, corpus.num_docs);
  return ds;
}

// Exact recount in scaled units: every counter family must hold q units per
// token currently assigned (instant adds net of executed removals).
void check_conservation(ParamDataset& ds, const LdaModel& model,
                        const Corpus& corpus, int passes) {
  VarStore& vars = ds.shared_mutable();
  const auto& nwk = vars.get_array(model.word_topic_key);
  const auto& nk = vars.get_array(model.topic_key);

  // n_k[k] == sum_w n_wk[w,k], bit-exact
  for (uint32_t k = 0; k < model.topics; ++k) {
    double col = 0.0;
    for (uint32_t w = 0; w < model.vocab; ++w)
      col += nwk[size_t(w) * model.topics + k];
    CHECK(col == nk[k]);
  }

  // total scaled mass equals q * tokens (every pass nets one token unit)
  size_t tokens = 0;
  std::map<uint32_t, size_t> tokens_per_doc;
  for (const auto& t : corpus.triples) {
    tokens += t.count;
    tokens_per_doc[t.doc - 1] += t.count;
  }
  (void)passes;
  double total = 0.0;
  for (double v : nwk) total += v;
  CHECK(total == double(tokens) * model.scale());

  for (const auto& [doc, count] : tokens_per_doc) {
    const auto& ndk = vars.get_array(model.doc_key(doc));
    double row = 0.0;
    for (double v : ndk) row += v;
    CHECK(row == double(count) * model.scale());
  }
}

}  // namespace

TEST_CASE("zero counts sample uniformly") {
  LdaModel model;
  model.topics = 4;
  model.vocab = 10;
  model.oversample = 1;
  auto ds = lda_dataset(Corpus{1, 10, {{1, 1, 1}}}, model, 1, 1);
  VarStore snapshot = ds.shared();
  SharedVars shared(std::move(snapshot), nullptr);
  const auto p = lda_topic_probabilities(model, shared, 0, 0);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("hand-computed sampling distribution") {
  // K=2, W=10, alpha=beta=0.1, n_d=(1,0), n_w=(0,1), n=(2,1) -> (0.4, 0.6)
  LdaModel model;
  model.topics = 2;
  model.vocab = 10;
  model.oversample = 1;
  VarStore vars;
  vars.define_array(model.word_topic_key,
                    std::vector<double>(10 * 2, 0.0));
  vars.define_array(model.topic_key, {2.0, 1.0});
  vars.define_array(model.doc_key(0), {1.0, 0.0});
  vars.add(model.word_topic_key, 0 * 2 + 1, 1.0);  // n_w = (0, 1) for word 0
  SharedVars shared(std::move(vars), nullptr);
  const auto p = lda_topic_probabilities(model, shared, 0, 0);
  CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("negative transients are clamped in the numerator only") {
  LdaModel model;
  model.topics = 2;
  model.vocab = 4;
  model.oversample = 1;
  VarStore vars;
  vars.define_array(model.word_topic_key, std::vector<double>(8, 0.0));
  vars.define_array(model.topic_key, {1.0, 1.0});
  vars.define_array(model.doc_key(0), {-2.0, 0.0});  // transient under-count
  SharedVars shared(std::move(vars), nullptr);
  const auto p = lda_topic_probabilities(model, shared, 0, 0);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));  // clamped to 0
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
  // storage is untouched
  CHECK(shared.get(model.doc_key(0), 0) == -2.0);
}

TEST_CASE("count conservation is exact across weights and oversampling") {
  const Corpus corpus = synth_corpus(24, 60, 4, 30, 77);
  for (const int m : {1, 2, 3}) {
    for (const int q : {1, 3}) {
      LdaModel model;
      model.topics = 4;
      model.vocab = 60;
      model.oversample = q;
      auto ds = lda_dataset(corpus, model, 6, 13);
      auto process = make_lda_process(model);
      for (int pass = 0; pass < 3; ++pass) {
        ds.run_iteration(process, m);
        check_conservation(ds, model, corpus, pass + 1);
      }
    }
  }
}

TEST_CASE("topics drawn are stored in the token's local variable") {
  LdaModel model;
  model.topics = 3;
  model.vocab = 5;
  model.oversample = 4;
  const Corpus corpus{2, 5, {{1, 1, 1}, {1, 3, 2}, {2, 2, 1}}};
  auto ds = lda_dataset(corpus, model, 2, 3);
  ds.run_iteration(make_lda_process(model), 1);
  for (uint32_t p = 0; p < ds.num_partitions(); ++p) {
    for (const auto& s : ds.partition(p).samples) {
      const auto& z = s.local.entry(model.local_topics_key).values;
      const auto& tok = std::get<Token>(s.element);
      CHECK(z.size() == size_t(model.oversample) * tok.count);
      for (double zk : z) {
        CHECK(zk >= 0.0);
        CHECK(zk < double(model.topics));
      }
      // one pending removal triple per draw
      CHECK(s.pending.size() == z.size() * 3);
    }
  }
}

TEST_CASE("single-topic predictive log-likelihood reduces to mean log phi") {
  LdaModel model;
  model.topics = 1;
  model.vocab = 4;
  model.oversample = 1;
  VarStore vars;
  vars.define_array(model.word_topic_key, {4.0, 2.0, 1.0, 1.0});
  vars.define_array(model.topic_key, {8.0});
  vars.define_array(model.doc_key(0), {8.0});

  LdaTestDoc doc;
  doc.observed = {0, 1};
  doc.heldout = {2, 3};
  const double got = lda_predictive_loglik(model, vars, {doc}, 5);

  const double beta_w = model.beta * 4.0;
  const double phi2 = (1.0 + model.beta) / (8.0 + beta_w);
  const double phi3 = (1.0 + model.beta) / (8.0 + beta_w);
  CHECK(got == doctest::Approx(0.5 * (std::log(phi2) + std::log(phi3)))
                   .epsilon(1e-12));
}

TEST_CASE("unseen held-out words stay finite and respect the smoothing floor") {
  LdaModel model;
  model.topics = 2;
  model.vocab = 6;
  VarStore vars;
  std::vector<double> nwk(12, 0.0);
  nwk[0 * 2 + 0] = 5.0 * model.scale();
  vars.define_array(model.word_topic_key, nwk);
  vars.define_array(model.topic_key, {5.0 * model.scale(), 0.0});
  vars.define_array(model.doc_key(0), {5.0 * model.scale(), 0.0});

  LdaTestDoc doc;
  doc.observed = {0, 0};
  doc.heldout = {5};  // never seen in training
  const double got = lda_predictive_loglik(model, vars, {doc}, 5);
  CHECK(std::isfinite(got));
  const double beta_w = model.beta * 6.0;
  const double floor_term = std::log(model.beta / (5.0 + beta_w));
  CHECK(got >= floor_term);
}

TEST_CASE("documents with no observed words are skipped") {
  LdaModel model;
  model.topics = 2;
  model.vocab = 4;
  VarStore vars;
  vars.define_array(model.word_topic_key, std::vector<double>(8, 1.0));
  vars.define_array(model.topic_key, {4.0, 4.0});

  LdaTestDoc empty_obs;
  empty_obs.heldout = {1};
  LdaTestDoc good;
  good.observed = {0};
  good.heldout = {2};
  // the skipped doc does not poison the score
  const double got = lda_predictive_loglik(model, vars, {empty_obs, good}, 3);
  CHECK(std::isfinite(got));
  // nothing to score at all is a usage error
  CHECK_THROWS_AS(lda_predictive_loglik(model, vars, {empty_obs}, 3),
                  UsageError);
}

TEST_CASE("test doc construction keeps unique words disjoint") {
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> docs{
      {{1, 2}, {2, 1}, {3, 1}, {4, 3}, {5, 1}, {6, 1}}};
  const auto test_docs = lda_make_test_docs(docs, 42);
  REQUIRE(test_docs.size() == 1);
  std::set<uint32_t> obs(test_docs[0].observed.begin(),
                         test_docs[0].observed.end());
  std::set<uint32_t> ho(test_docs[0].heldout.begin(),
                        test_docs[0].heldout.end());
  for (uint32_t w : obs) CHECK(ho.count(w) == 0);
  CHECK(test_docs[0].observed.size() + test_docs[0].heldout.size() == 9);
}

TEST_CASE("duplicating the training corpus barely moves the score") {
  const uint32_t K = 4, W = 120;
  Corpus corpus = synth_corpus(60, W, K, 40, 5);
  Corpus doubled = corpus;
  doubled.num_docs = corpus.num_docs * 2;
  for (const auto& t : corpus.triples)
    doubled.triples.push_back({t.doc + corpus.num_docs, t.word, t.count});

  // shared evaluation docs
  Corpus eval_corpus = synth_corpus(8, W, K, 40, 6);
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> eval_docs(8);
  for (const auto& t : eval_corpus.triples)
    eval_docs[t.doc - 1].emplace_back(t.word, t.count);
  const auto test_docs = lda_make_test_docs(eval_docs, 9);

  LdaModel model;
  model.topics = K;
  model.vocab = W;
  model.oversample = 1;

  auto train_and_score = [&](const Corpus& c) {
    auto ds = lda_dataset(c, model, 4, 21);
    auto process = make_lda_process(model);
    for (int pass = 0; pass < 20; ++pass) ds.run_iteration(process, 1);
    return lda_predictive_loglik(model, ds.shared_mutable(), test_docs, 33);
  };
  const double base = train_and_score(corpus);
  const double dup = train_and_score(doubled);
  CHECK(std::fabs(base - dup) <= 0.02);
}
