#include "splash/dataio.h"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "splash/errors.h"
#include "splash/rng.h"

namespace splash {

namespace {

[[noreturn]] void bad_line(const char* what, size_t line_no) {
  throw DataError(std::string(what) + " at line " + std::to_string(line_no));
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_u32(const std::string& s, uint32_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && p == end;
}

bool parse_i64(const std::string& s, int64_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && p == end;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Shortest round-trip formatting so serialized values re-parse bit-exact.
std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

std::vector<LabeledPoint> parse_libsvm(std::istream& in) {
  std::vector<LabeledPoint> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string tok;
    if (!(ls >> tok)) bad_line("empty record", line_no);
    LabeledPoint p;
    int64_t label;
    if (!parse_i64(tok, label)) bad_line("bad label", line_no);
    p.label = static_cast<int32_t>(label);
    uint32_t prev_index = 0;
    bool first = true;
    while (ls >> tok) {
      const size_t colon = tok.find(':');
      if (colon == std::string::npos) bad_line("missing ':'", line_no);
      uint32_t idx;
      double val;
      if (!parse_u32(tok.substr(0, colon), idx) || idx < 1)
        bad_line("bad feature index", line_no);
      if (!parse_double(tok.substr(colon + 1), val))
        bad_line("bad feature value", line_no);
      if (!first && idx <= prev_index)
        bad_line("feature indices not strictly increasing", line_no);
      first = false;
      prev_index = idx;
      p.x.entries.emplace_back(idx - 1, val);  // normalize to 0-based
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_libsvm(std::ostream& out, const std::vector<LabeledPoint>& points) {
  for (const auto& p : points) {
    out << p.label;
    for (const auto& [i, v] : p.x.entries)
      out << ' ' << (i + 1) << ':' << fmt_double(v);
    out << '\n';
  }
}

std::vector<RatingTriple> parse_ratings(std::istream& in) {
  std::vector<RatingTriple> out;
  std::map<std::pair<int64_t, uint32_t>, size_t> seen;
  std::string line;
  size_t line_no = 0;
  size_t dups = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::string user_s, item_s, rating_s;
    if (!std::getline(ls, user_s, ',') || !std::getline(ls, item_s, ',') ||
        !std::getline(ls, rating_s))
      bad_line("expected user,item,rating", line_no);
    RatingTriple r;
    if (!parse_i64(trim(user_s), r.user)) bad_line("bad user id", line_no);
    if (!parse_u32(trim(item_s), r.item)) bad_line("bad item id", line_no);
    if (!parse_double(trim(rating_s), r.rating))
      bad_line("bad rating value", line_no);
    const auto key = std::make_pair(r.user, r.item);
    auto it = seen.find(key);
    if (it != seen.end()) {
      out[it->second] = r;  // last occurrence wins
      ++dups;
    } else {
      seen.emplace(key, out.size());
      out.push_back(r);
    }
  }
  if (dups > 0)
    std::cerr << "ratings: " << dups
              << " duplicate (user,item) pairs, kept last occurrence\n";
  return out;
}

void write_ratings(std::ostream& out,
                   const std::vector<RatingTriple>& triples) {
  for (const auto& r : triples)
    out << r.user << ',' << r.item << ',' << fmt_double(r.rating) << '\n';
}

Corpus parse_bow(std::istream& in) {
  std::string line;
  size_t line_no = 0;
  uint32_t header[3];
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, line)) throw FormatError("bow: truncated header");
    ++line_no;
    if (!parse_u32(trim(line), header[i]))
      throw FormatError("bow: bad header at line " + std::to_string(line_no));
  }
  Corpus corpus;
  corpus.num_docs = header[0];
  corpus.vocab_size = header[1];
  const uint32_t nnz = header[2];
  corpus.triples.reserve(nnz);
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    std::string a, b, c;
    if (!(ls >> a >> b >> c)) bad_line("bow: expected doc word count", line_no);
    Corpus::Triple triple;
    if (!parse_u32(a, triple.doc) || !parse_u32(b, triple.word) ||
        !parse_u32(c, triple.count))
      bad_line("bow: bad triple", line_no);
    if (triple.doc < 1 || triple.doc > corpus.num_docs)
      throw DataError("bow: doc id out of range at line " +
                      std::to_string(line_no));
    if (triple.word < 1 || triple.word > corpus.vocab_size)
      throw DataError("bow: word id out of range at line " +
                      std::to_string(line_no));
    if (triple.count < 1)
      throw DataError("bow: count must be >= 1 at line " +
                      std::to_string(line_no));
    corpus.triples.push_back(triple);
  }
  if (corpus.triples.size() != nnz)
    throw FormatError("bow: header promised " + std::to_string(nnz) +
                      " triples, found " +
                      std::to_string(corpus.triples.size()));
  return corpus;
}

void write_bow(std::ostream& out, const Corpus& corpus) {
  out << corpus.num_docs << '\n'
      << corpus.vocab_size << '\n'
      << corpus.triples.size() << '\n';
  for (const auto& t : corpus.triples)
    out << t.doc << ' ' << t.word << ' ' << t.count << '\n';
}

std::string read_file_maybe_gzip(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (raw.size() < 2 || static_cast<uint8_t>(raw[0]) != 0x1f ||
      static_cast<uint8_t>(raw[1]) != 0x8b)
    return raw;

  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK)
    throw FormatError("gzip: inflateInit failed");
  std::string out;
  std::vector<char> buf(1 << 16);
  zs.next_in = reinterpret_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  int ret = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("gzip: corrupt stream in " + path);
    }
    out.append(buf.data(), buf.size() - zs.avail_out);
  } while (ret != Z_STREAM_END && zs.avail_in > 0);
  inflateEnd(&zs);
  if (ret != Z_STREAM_END) throw FormatError("gzip: truncated stream in " + path);
  return out;
}

RatingsSplit split_ratings(const std::vector<RatingTriple>& triples,
                           uint64_t seed, double test_fraction) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw UsageError("split_ratings: test_fraction must be in [0, 1)");
  std::vector<size_t> order(triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto g = rng::make_engine(seed, {0x5711});
  rng::shuffle(order, g);
  const size_t test_count = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(triples.size())));
  RatingsSplit split;
  for (size_t k = 0; k < order.size(); ++k) {
    if (k < test_count)
      split.test.push_back(triples[order[k]]);
    else
      split.train.push_back(triples[order[k]]);
  }
  return split;
}

std::vector<RatingBundle> group_ratings_by_user(
    const std::vector<RatingTriple>& triples) {
  std::map<int64_t, std::map<uint32_t, double>> by_user;
  for (const auto& t : triples) by_user[t.user][t.item] = t.rating;
  std::vector<RatingBundle> out;
  out.reserve(by_user.size());
  for (auto& [user, items] : by_user) {
    RatingBundle b;
    b.user = user;
    for (const auto& [item, rating] : items) b.ratings.emplace_back(item, rating);
    out.push_back(std::move(b));
  }
  return out;
}

CorpusSplit split_corpus(const Corpus& corpus, uint32_t num_test_docs) {
  if (num_test_docs >= corpus.num_docs)
    throw UsageError("split_corpus: too many test documents");
  const uint32_t train_docs = corpus.num_docs - num_test_docs;
  CorpusSplit split;
  split.train.num_docs = train_docs;
  split.train.vocab_size = corpus.vocab_size;
  split.test_docs.resize(num_test_docs);
  for (const auto& t : corpus.triples) {
    if (t.doc <= train_docs) {
      split.train.triples.push_back(t);
    } else {
      split.test_docs[t.doc - train_docs - 1].emplace_back(t.word, t.count);
    }
  }
  return split;
}

std::vector<std::vector<double>> synth_toy(size_t n, uint64_t seed) {
  if (n < 1) throw UsageError("synth_toy: n must be >= 1");
  auto g = rng::make_engine(seed, {0x70f});
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i)
    out.push_back({rng::gaussian(g), rng::gaussian(g)});
  return out;
}

std::vector<LabeledPoint> synth_classification(size_t n, uint32_t dim,
                                               uint32_t classes,
                                               uint64_t seed) {
  auto g = rng::make_engine(seed, {0xc1a5});
  // Class means drawn once; features are mean + noise, sparsified by
  // dropping near-zero coordinates.
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  for (auto& m : means)
    for (double& v : m) v = 2.0 * rng::gaussian(g);
  std::vector<LabeledPoint> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t y =
        static_cast<uint32_t>(rng::uniform_below(g, classes));
    LabeledPoint p;
    p.label = static_cast<int32_t>(y);
    for (uint32_t j = 0; j < dim; ++j) {
      const double v = means[y][j] + rng::gaussian(g);
      if (std::fabs(v) > 1.0) p.x.entries.emplace_back(j, v);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RatingTriple> synth_ratings(uint32_t users, uint32_t items,
                                        uint32_t rank, double noise,
                                        uint32_t ratings_per_user,
                                        uint64_t seed) {
  auto g = rng::make_engine(seed, {0x3a71});
  std::vector<std::vector<double>> U(users, std::vector<double>(rank));
  std::vector<std::vector<double>> V(items, std::vector<double>(rank));
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  for (auto& row : U)
    for (double& v : row) v = std::fabs(rng::gaussian(g)) * scale + 0.2;
  for (auto& row : V)
    for (double& v : row) v = std::fabs(rng::gaussian(g)) * scale + 0.2;

  std::vector<RatingTriple> out;
  out.reserve(static_cast<size_t>(users) * ratings_per_user);
  std::vector<uint32_t> item_ids(items);
  for (uint32_t j = 0; j < items; ++j) item_ids[j] = j;
  for (uint32_t u = 0; u < users; ++u) {
    rng::shuffle(item_ids, g);
    const uint32_t count = std::min(ratings_per_user, items);
    for (uint32_t k = 0; k < count; ++k) {
      const uint32_t j = item_ids[k];
      double r = noise * rng::gaussian(g);
      for (uint32_t f = 0; f < rank; ++f) r += U[u][f] * V[j][f];
      out.push_back({static_cast<int64_t>(u), j, r});
    }
  }
  return out;
}

Corpus synth_corpus(uint32_t docs, uint32_t vocab, uint32_t topics,
                    uint32_t tokens_per_doc, uint64_t seed) {
  if (topics < 1 || vocab < topics)
    throw UsageError("synth_corpus: need vocab >= topics >= 1");
  auto g = rng::make_engine(seed, {0xc0d9});
  // Each topic is a block of the vocabulary; a document mixes one or two
  // topics so the structure is recoverable at desk scale.
  const uint32_t block = vocab / topics;
  Corpus corpus;
  corpus.num_docs = docs;
  corpus.vocab_size = vocab;
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> counts;
  for (uint32_t d = 1; d <= docs; ++d) {
    const uint32_t main_topic =
        static_cast<uint32_t>(rng::uniform_below(g, topics));
    const uint32_t alt_topic =
        static_cast<uint32_t>(rng::uniform_below(g, topics));
    for (uint32_t i = 0; i < tokens_per_doc; ++i) {
      const uint32_t topic =
          rng::uniform01(g) < 0.8 ? main_topic : alt_topic;
      const uint32_t lo = topic * block;
      const uint32_t hi = topic + 1 == topics ? vocab : lo + block;
      const uint32_t word =
          lo + static_cast<uint32_t>(rng::uniform_below(g, hi - lo)) + 1;
      counts[{d, word}] += 1;
    }
  }
  for (const auto& [key, count] : counts)
    corpus.triples.push_back({key.first, key.second, count});
  return corpus;
}

}  // namespace splash
