// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "lrptext/embedding.h"
#include "lrptext/errors.h"
#include "test_util.h"

namespace lrptext {
namespace {

using testing::TempDir;

void Write(const std::filesystem::path &path, const std::string &text) {
  std::ofstream(path, std::ios::binary) << text;
}

// FNV-1a 64 written out from its constants.
std::uint64_t RefFnv(const std::string &s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Code-point n-grams of "<token>" by decoding UTF-8 lead bytes.
std::vector<std::string> RefNgrams(const std::string &token, int lo, int hi) {
  const std::string w = "<" + token + ">";
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if ((static_cast<unsigned char>(w[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(w.size());
  const int cps = static_cast<int>(starts.size()) - 1;
  std::vector<std::string> out;
  for (int n = lo; n <= hi; ++n) {
    for (int s = 0; s + n <= cps; ++s) out.push_back(w.substr(starts[s], starts[s + n] - starts[s]));
  }
  return out;
}

TEST(LoadVec, ParsesHeaderAndRows) {
  TempDir dir("emb");
  Write(dir / "e.vec", "2 3\na 1 0 0\nb 0 1 0\n");
  const EmbeddingTable table = EmbeddingTable::LoadVec(dir / "e.vec");
  EXPECT_EQ(table.dim(), 3);
  EXPECT_EQ(table.vocab_size(), 2u);
  const Vector a = table.Embed("a");
  EXPECT_EQ(a, (Vector(3) << 1, 0, 0).finished());
}

TEST(LoadVec, CountMismatchAndBadRows) {
  TempDir dir("emb");
  Write(dir / "short.vec", "5 2\na 1 0\nb 0 1\nc 1 1\nd 0 0\n");
  EXPECT_THROW(EmbeddingTable::LoadVec(dir / "short.vec"), DataError);
  Write(dir / "ragged.vec", "2 2\na 1 0\nb 0 1 5\n");
  try {
    EmbeddingTable::LoadVec(dir / "ragged.vec");
    FAIL();
  } catch (const DataError &e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadVec, DuplicateKeepsLastWithWarning) {
  TempDir dir("emb");
  Write(dir / "dup.vec", "2 2\na 1 0\na 0 1\n");
  const EmbeddingTable table = EmbeddingTable::LoadVec(dir / "dup.vec");
  EXPECT_EQ(table.Embed("a"), (Vector(2) << 0, 1).finished());
  EXPECT_EQ(table.warnings().size(), 1u);
}

TEST(Subwords, HashAndNgramsMatchReference) {
  for (const std::string s : {"", "a", "<ab", "naïve", "foobar"}) {
    EXPECT_EQ(Fnv1a64(s), RefFnv(s)) << s;
  }
  for (const std::string token : {"naïve", "ab", "foobar"}) {
    auto got = CharNgrams(token, 3, 6);
    auto ref = RefNgrams(token, 3, 6);
    std::sort(got.begin(), got.end());
    std::sort(ref.begin(), ref.end());
    EXPECT_EQ(got, ref) << token;
  }
}

TEST(Embed, OovIsMeanOfRehashedBuckets) {
  const EmbeddingTable table(8);
  for (const std::string token : {"unseenword", "naïve", "x"}) {
    const auto grams = RefNgrams(token, 3, 6);
    Vector expect = Vector::Zero(8);
    for (const auto &g : grams) {
      expect += table.BucketVector(static_cast<std::uint32_t>(RefFnv(g) % 50000));
    }
    expect /= static_cast<double>(grams.size());
    const Vector got = table.Embed(token);
    EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-15) << token;
  }
}

TEST(Embed, BucketVectorsAreBoundedAndDistinct) {
  const EmbeddingTable table(16);
  const Vector a = table.BucketVector(1);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 0.5 / 16);
  EXPECT_EQ(a, table.BucketVector(1));
  int differ = 0;
  for (int i = 0; i < 20; ++i) {
    if (table.Embed("qq" + std::to_string(i)) != table.Embed("zz" + std::to_string(i))) ++differ;
  }
  EXPECT_EQ(differ, 20);
}

TEST(EmbedDocument, PadsTruncatesAndCopiesRows) {
  EmbeddingTable table(3);
  table.Set("a", {1, 0, 0});
  const DocumentMatrix doc = EmbedDocument(table, {"a", "oov"}, 4);
  EXPECT_EQ(doc.rows(), 4);
  EXPECT_EQ(doc.mask, (Mask{1, 1, 0, 0}));
  EXPECT_EQ(Vector(doc.values.row(1).transpose()), table.Embed("oov"));
  EXPECT_TRUE(doc.values.bottomRows(2).isZero());

  std::vector<std::string> many(300);
  for (int i = 0; i < 300; ++i) many[i] = "t" + std::to_string(i);
  const DocumentMatrix cut = EmbedDocument(table, many, 256);
  EXPECT_EQ(cut.rows(), 256);
  EXPECT_EQ(cut.real_length(), 256);
  for (int i = 0; i < 256; i += 51) {
    EXPECT_EQ(Vector(cut.values.row(i).transpose()), table.Embed(many[i]));
  }
  EXPECT_THROW(EmbedDocument(table, {}, 4), DataError);
}

}  // namespace
}  // namespace lrptext
