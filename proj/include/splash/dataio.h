#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "splash/element.h"

namespace splash {

// Bag-of-words corpus in the UCI docword layout. Doc and word ids stay
// 1-based as in the format; conversion to the engine's 0-based tokens
// happens at task setup.
struct Corpus {
  uint32_t num_docs = 0;    // D
  uint32_t vocab_size = 0;  // W
  struct Triple {
    uint32_t doc = 0;   // 1-based
    uint32_t word = 0;  // 1-based
    uint32_t count = 0;
  };
  std::vector<Triple> triples;
};

struct RatingTriple {
  int64_t user = 0;
  uint32_t item = 0;
  double rating = 0.0;
};

// --- parsers (reject malformed records, never skip them silently) ---

// Lines "label idx:val idx:val ...", 1-based strictly increasing indices;
// normalized to 0-based on output.
std::vector<LabeledPoint> parse_libsvm(std::istream& in);
// CSV "user,item,rating"; duplicate (user, item) pairs keep the last
// occurrence with a warning.
std::vector<RatingTriple> parse_ratings(std::istream& in);
// Header lines D, W, NNZ followed by "docID wordID count" triples.
Corpus parse_bow(std::istream& in);

// --- canonical serializers (round-trip preserves all records exactly) ---

void write_libsvm(std::ostream& out, const std::vector<LabeledPoint>& points);
void write_ratings(std::ostream& out, const std::vector<RatingTriple>& triples);
void write_bow(std::ostream& out, const Corpus& corpus);

// Reads a whole file; transparently inflates gzip input.
std::string read_file_maybe_gzip(const std::string& path);

// --- splits (kept here so every algorithm sees identical splits) ---

struct RatingsSplit {
  std::vector<RatingTriple> train;
  std::vector<RatingTriple> test;
};
RatingsSplit split_ratings(const std::vector<RatingTriple>& triples,
                           uint64_t seed, double test_fraction = 0.1);

// Groups triples into per-user bundles, users in ascending order, each
// user's items in ascending order.
std::vector<RatingBundle> group_ratings_by_user(
    const std::vector<RatingTriple>& triples);

// Splits a corpus into training triples and per-document test word lists
// (the last `num_test_docs` distinct docs by id).
struct CorpusSplit {
  Corpus train;
  // per test doc: (word id 1-based, count)
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> test_docs;
};
CorpusSplit split_corpus(const Corpus& corpus, uint32_t num_test_docs);

// --- synthetic generators ---

// N iid draws from the standard 2-d normal.
std::vector<std::vector<double>> synth_toy(size_t n, uint64_t seed);

// Gaussian-blob multiclass data in sparse form.
std::vector<LabeledPoint> synth_classification(size_t n, uint32_t dim,
                                               uint32_t classes,
                                               uint64_t seed);

// Low-rank ratings: user/item factors of the given rank plus noise, every
// user rating `ratings_per_user` random items.
std::vector<RatingTriple> synth_ratings(uint32_t users, uint32_t items,
                                        uint32_t rank, double noise,
                                        uint32_t ratings_per_user,
                                        uint64_t seed);

// Corpus drawn from `topics` known topics over disjoint vocabulary blocks,
// so topic recovery is measurable.
Corpus synth_corpus(uint32_t docs, uint32_t vocab, uint32_t topics,
                    uint32_t tokens_per_doc, uint64_t seed);

}  // namespace splash
