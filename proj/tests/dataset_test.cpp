#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "postcheck/common/error.hpp"
#include "postcheck/dataset/csv.hpp"
#include "postcheck/dataset/folds.hpp"
#include "postcheck/dataset/records.hpp"
#include "postcheck/dataset/synth.hpp"
#include "test_util.hpp"

namespace postcheck::dataset {
namespace {

using testing::TempDir;

const char* kHeader = "id,user_name,post_message,timestamp_post,num_like_post,num_comment_post,num_share_post,image_links,label\n";

std::filesystem::path write_file(const TempDir& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

TEST(LoadCorpus, KeepsFileOrderAndMissingCells) {
  TempDir dir("load");
  const auto p = write_file(dir, "c.csv",
                            std::string(kHeader) +
                                "a,u1,\"hello, world\",1577836800,1,2,3,,0\n"
                                "b,u2,second,,4,,6,\"['http://x/1.jpg']\",1\n"
                                "c,u1,third,1577836900,0,0,0,,\n");
  const auto recs = load_corpus(p);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].id, "a");
  EXPECT_EQ(recs[0].text.value(), "hello, world");
  EXPECT_EQ(recs[1].id, "b");
  EXPECT_FALSE(recs[1].timestamp.has_value());
  EXPECT_FALSE(recs[1].comments.has_value());
  EXPECT_EQ(recs[1].image_refs.size(), 1u);
  EXPECT_FALSE(recs[2].label.has_value());
}

TEST(LoadCorpus, MissingFileIsIoError) { EXPECT_THROW(load_corpus("/nonexistent/x.csv"), IoError); }

TEST(LoadCorpus, MissingColumnNamesIt) {
  TempDir dir("schema");
  const auto p = write_file(dir, "c.csv", "id,user_name,post_message\na,u,t\n");
  try {
    load_corpus(p);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("timestamp_post"), std::string::npos);
  }
}

TEST(LoadCorpus, TsvByExtension) {
  TempDir dir("tsv");
  std::string header = kHeader;
  std::replace(header.begin(), header.end(), ',', '\t');
  const auto p = write_file(dir, "c.tsv", header + "a\tu\tt\t1\t1\t1\t1\t\t0\n");
  EXPECT_EQ(load_corpus(p).size(), 1u);
}

TEST(DropInvalid, DropsBadLabelsAndNegativeCounts) {
  RawRecord ok{.id = "ok", .user_id = "u", .label = 0};
  RawRecord bad_label{.id = "bl", .user_id = "u", .label = 2};
  RawRecord negative{.id = "neg", .user_id = "u", .likes = -3, .label = 1};
  const auto [kept, report] = drop_invalid({ok, bad_label, negative});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "ok");
  ASSERT_EQ(report.dropped.size(), 2u);
  EXPECT_EQ(report.dropped[0].reason, "invalid label");
  EXPECT_EQ(report.dropped[1].reason, "negative count");
}

TEST(DropInvalid, AllValidIsIdentity) {
  const auto recs = synthesize_corpus(50, 3);
  const auto [kept, report] = drop_invalid(recs);
  EXPECT_EQ(kept, recs);
  EXPECT_TRUE(report.dropped.empty());
}

TEST(FillMissing, ZeroCountsAndFloorTimestamp) {
  RawRecord r{.id = "a", .user_id = "u", .label = 0};
  const auto out = fill_missing({r}, 1577836800);
  EXPECT_EQ(out[0].likes, 0);
  EXPECT_EQ(out[0].comments, 0);
  EXPECT_EQ(out[0].shares, 0);
  EXPECT_EQ(out[0].timestamp, 1577836800);
  EXPECT_EQ(out[0].text, "");
}

TEST(FillMissing, CompleteRecordUnchanged) {
  RawRecord r{.id = "a", .user_id = "u", .text = "x", .timestamp = 5, .likes = 1, .comments = 2, .shares = 3,
              .label = 1};
  const auto out = fill_missing({r}, 0);
  EXPECT_EQ(to_raw(out[0]), r);
}

TEST(FillMissing, UndefinedFloorIsConfigError) {
  RawRecord r{.id = "a", .user_id = "u"};
  EXPECT_THROW(fill_missing({r}, std::nullopt), ConfigError);
}

TEST(FillMissing, Idempotent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto recs = synthesize_corpus(200, seed);
    const auto floor = min_timestamp(recs);
    const auto once = fill_missing(recs, floor);
    std::vector<RawRecord> lifted;
    for (const auto& c : once) lifted.push_back(to_raw(c));
    EXPECT_EQ(fill_missing(lifted, floor), once);
  }
}

TEST(Folds, TableTotalSplitsIntoEightAndTwo) {
  std::vector<int> labels(5172, 0);
  for (int i = 0; i < 934; ++i) labels[static_cast<std::size_t>(i)] = 1;
  const auto plan = make_folds(labels, 10, 1);
  std::map<std::size_t, int> size_counts;
  for (int f = 0; f < 10; ++f) size_counts[plan.test_indices(f).size()] += 1;
  // Oracle: 5172 = 10 * 517 + 2.
  EXPECT_EQ(size_counts.size(), 2u);
  EXPECT_EQ(size_counts[517], 10 - 5172 % 10);
  EXPECT_EQ(size_counts[518], 5172 % 10);
}

TEST(Folds, FourRecordsTwoFoldsStratified) {
  const std::vector<int> labels = {1, 0, 1, 0};
  const auto plan = make_folds(labels, 2, 9);
  for (int f = 0; f < 2; ++f) {
    int pos = 0;
    const auto idx = plan.test_indices(f);
    ASSERT_EQ(idx.size(), 2u);
    for (auto i : idx) pos += labels[i];
    EXPECT_EQ(pos, 1);
  }
}

TEST(Folds, TooManyFoldsIsError) {
  const std::vector<int> labels = {1, 0, 1};
  EXPECT_THROW(make_folds(labels, 4, 0), Error);
}

// Partition, balance, stratification and determinism over many seeds.
TEST(Folds, InvariantsOverHundredSeeds) {
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = 30 + static_cast<int>(rng() % 400);
    const int k = 2 + static_cast<int>(rng() % 9);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = rng() % 5 == 0;
    labels[0] = 1;
    labels[1] = 0;
    const bool stratified = seed % 4 != 0;
    const auto plan = make_folds(labels, k, seed, stratified);
    EXPECT_EQ(plan.assignments, make_folds(labels, k, seed, stratified).assignments);

    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::size_t lo = SIZE_MAX, hi = 0;
    int total_pos = 0;
    for (int l : labels) total_pos += l;
    for (int f = 0; f < k; ++f) {
      const auto test = plan.test_indices(f);
      const auto train = plan.train_indices(f);
      EXPECT_EQ(test.size() + train.size(), static_cast<std::size_t>(n));
      std::set<std::size_t> test_set(test.begin(), test.end());
      for (auto i : train) EXPECT_FALSE(test_set.count(i));
      for (auto i : test) seen[i] += 1;
      lo = std::min(lo, test.size());
      hi = std::max(hi, test.size());
      if (stratified) {
        int pos = 0;
        for (auto i : test) pos += labels[i];
        EXPECT_LE(std::abs(pos * k - total_pos), k) << "seed " << seed << " fold " << f;
      }
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_LE(hi - lo, stratified ? 2u : 1u);
  }
}

TEST(Folds, JsonRoundTrip) {
  const std::vector<int> labels = {1, 0, 1, 0, 0, 0};
  const auto plan = make_folds(labels, 3, 4);
  const auto back = FoldPlan::from_json(plan.to_json());
  EXPECT_EQ(back.assignments, plan.assignments);
  EXPECT_EQ(back.k, 3);
}

TEST(Holdout, ExactShareAndBothClasses) {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i * 5)] = 1;
  const auto [train, test] = stratified_holdout(labels, 0.2, 3);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  int pos = 0;
  for (auto i : test) pos += labels[i];
  EXPECT_EQ(pos, 4);
}

TEST(Synth, DeterministicAndTableRatio) {
  const auto a = synthesize_corpus(1000, 7);
  EXPECT_EQ(a, synthesize_corpus(1000, 7));
  int unreliable = 0;
  for (const auto& r : a) unreliable += r.label.value() == kUnreliable;
  // 934 / 5172 = 0.1806; binomial sd at n = 1000 is about 12.
  EXPECT_NEAR(unreliable, 180.6, 50);
}

TEST(Synth, WriteThenLoadRoundTrips) {
  TempDir dir("synth");
  const auto recs = synthesize_corpus(100, 2);
  write_corpus(dir / "c.csv", recs);
  EXPECT_EQ(load_corpus(dir / "c.csv"), recs);
}

TEST(Csv, QuotedFieldsRoundTrip) {
  TempDir dir("csv");
  CsvTable t{{"a", "b"}, {{"x,y", "he said \"hi\"\nnext"}, {"", "z"}}};
  write_csv_file(dir / "t.csv", t);
  const auto back = read_csv_file(dir / "t.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(ImageRefs, ParsesListForms) {
  EXPECT_TRUE(parse_image_refs("").empty());
  EXPECT_EQ(parse_image_refs("['a.jpg', 'b.png']").size(), 2u);
}

}  // namespace
}  // namespace postcheck::dataset
