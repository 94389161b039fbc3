// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dgs/apps.hpp"
#include "dgs/model.hpp"

using namespace dgs;

namespace {

Program<CounterState> counter() { return key_counter_program(2); }

Event ev(TagId tag, StreamId stream, Timestamp ts) { return Event{{tag, stream}, ts, Value(0)}; }
Heartbeat hb(TagId tag, StreamId stream, Timestamp ts) { return Heartbeat{{tag, stream}, ts}; }

// Random streams with mostly increasing timestamps; `sorted` forces strictly
// increasing per stream.
Streams random_streams(std::mt19937_64& rng, bool sorted, std::size_t max_messages) {
  Streams s(1 + rng() % 4);
  auto total = rng() % (max_messages + 1);
  std::vector<Timestamp> last(s.size(), 0);
  for (std::size_t i = 0; i < total; ++i) {
    auto st = static_cast<StreamId>(rng() % s.size());
    Timestamp ts = sorted ? last[st] + 1 + rng() % 5 : rng() % 30;
    last[st] = ts;
    if (rng() % 3 == 0) {
      s[st].push_back(hb(0, st, ts));
    } else {
      s[st].push_back(ev(static_cast<TagId>(rng() % 3), st, ts));
    }
  }
  return s;
}

}  // namespace

TEST(Tag, ParsesNamesAndKeys) {
  EXPECT_EQ(Tag::parse("i(3)"), (Tag{"i", 3}));
  EXPECT_EQ(Tag::parse("b"), (Tag{"b", std::nullopt}));
  EXPECT_EQ(Tag::parse("i(3)").str(), "i(3)");
  EXPECT_THROW(Tag::parse("i(3"), Error);
  EXPECT_THROW(Tag::parse(""), Error);
}

TEST(Alphabet, UnknownTagThrows) {
  auto p = counter();
  EXPECT_EQ(p.alphabet.name(p.alphabet.id("r(2)")), "r(2)");
  try {
    p.alphabet.id("r(9)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTag);
  }
}

TEST(ValidateDependence, CounterRelationIsSymmetric) {
  auto p = counter();
  EXPECT_TRUE(validate_dependence(p.rel, p.alphabet).empty());
}

TEST(ValidateDependence, EmptyRelationIsSymmetric) {
  auto p = counter();
  EXPECT_TRUE(validate_dependence(DependenceRelation(p.alphabet.size()), p.alphabet).empty());
}

TEST(ValidateDependence, ReportsDirectedPair) {
  Alphabet a({Tag{"a", std::nullopt}, Tag{"b", std::nullopt}});
  DependenceRelation rel(2);
  rel.add_directed(0, 1);
  auto v = validate_dependence(rel, a);
  ASSERT_EQ(v.size(), 1U);
  EXPECT_EQ(v[0], (std::pair<TagId, TagId>{0, 1}));
}

TEST(IndepPreds, SameIncrementTagOnBothSides) {
  auto p = key_counter_program(3);
  auto i3 = p.alphabet.id("i(3)");
  auto n = p.alphabet.size();
  EXPECT_TRUE(indep_preds(TagSet(n, {i3}), TagSet(n, {i3}), p.rel));
}

TEST(IndepPreds, ResetAndIncrementOfSameKey) {
  auto p = counter();
  auto n = p.alphabet.size();
  EXPECT_FALSE(indep_preds(TagSet(n, {p.alphabet.id("r(1)")}), TagSet(n, {p.alphabet.id("i(1)")}), p.rel));
}

TEST(IndepPreds, EmptyPredicate) {
  auto p = counter();
  auto n = p.alphabet.size();
  EXPECT_TRUE(indep_preds(TagSet(n), TagSet::full(n), p.rel));
}

TEST(IndepPreds, SymmetricInArguments) {
  std::mt19937_64 rng(3);
  auto p = key_counter_program(3);
  auto n = p.alphabet.size();
  for (int i = 0; i < 200; ++i) {
    TagSet a(n), b(n);
    for (TagId t = 0; t < n; ++t) {
      if (rng() % 3 == 0) a.insert(t);
      if (rng() % 3 == 0) b.insert(t);
    }
    EXPECT_EQ(indep_preds(a, b, p.rel), indep_preds(b, a, p.rel));
  }
}

TEST(SortStreams, MergesByOrder) {
  Streams s{{ev(0, 0, 1), ev(0, 0, 3)}, {ev(1, 1, 2)}};
  auto out = sort_streams(s);
  ASSERT_EQ(out.size(), 3U);
  EXPECT_EQ(out[0].ts, 1U);
  EXPECT_EQ(out[1].ts, 2U);
  EXPECT_EQ(out[1].itag.stream, 1U);
  EXPECT_EQ(out[2].ts, 3U);
}

TEST(SortStreams, DropsHeartbeats) {
  Streams s{{hb(0, 0, 1), hb(0, 0, 2)}};
  EXPECT_TRUE(sort_streams(s).empty());
}

TEST(SortStreams, SingleStreamKeepsOrder) {
  auto p = counter();
  const char* seq[] = {"i(1)", "i(2)", "r(1)", "i(2)", "r(1)"};
  Streams s(1);
  Timestamp ts = 0;
  for (auto t : seq) s[0].push_back(ev(p.alphabet.id(t), 0, ++ts));
  auto out = sort_streams(s);
  ASSERT_EQ(out.size(), 5U);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(p.alphabet.name(out[i].tag()), seq[i]);
}

TEST(SortStreams, EqualTimestampsBreakTiesByStream) {
  Streams s{{ev(0, 0, 5)}, {ev(1, 1, 5)}};
  auto out = sort_streams(s);
  EXPECT_EQ(out[0].itag.stream, 0U);
  EXPECT_EQ(out[1].itag.stream, 1U);
}

TEST(SortStreams, RejectsUnsortedStream) {
  Streams s{{ev(0, 0, 5), ev(0, 0, 5)}};
  try {
    sort_streams(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedStream);
  }
}

TEST(SortStreams, MatchesFlattenAndSort) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = random_streams(rng, true, 1000);
    std::vector<Event> flat;
    for (const auto& st : s) {
      for (const auto& m : st) {
        if (!is_heartbeat(m)) flat.push_back(std::get<Event>(m));
      }
    }
    std::sort(flat.begin(), flat.end(), [](const Event& a, const Event& b) { return a.order() < b.order(); });
    auto got = sort_streams(s);
    ASSERT_EQ(got.size(), flat.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].order(), flat[i].order());
      EXPECT_EQ(got[i].itag, flat[i].itag);
    }
  }
}

TEST(ValidateInput, TerminalHeartbeatsGiveProgress) {
  Streams s{{ev(0, 0, 1), hb(0, 0, 100)}, {ev(1, 1, 2), hb(1, 1, 100)}};
  EXPECT_TRUE(validate_input_instance(s).empty());
}

TEST(ValidateInput, RepeatedTimestampIsMonotonicityViolation) {
  Streams s{{ev(0, 0, 5), ev(0, 0, 5)}};
  auto v = validate_input_instance(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].kind, InputViolation::Kind::Monotonicity);
  EXPECT_EQ(v[0].stream, 0U);
  EXPECT_EQ(v[0].index, 1U);
}

TEST(ValidateInput, StreamEndingEarlyIsProgressViolation) {
  Streams s{{ev(0, 0, 10)}, {ev(1, 1, 7)}};
  auto v = validate_input_instance(s);
  ASSERT_EQ(v.size(), 1U);
  EXPECT_EQ(v[0].kind, InputViolation::Kind::Progress);
  EXPECT_EQ(v[0].stream, 0U);
  EXPECT_EQ(v[0].other, 1U);
}

TEST(ValidateInput, WrongStreamAttribution) {
  Streams s{{ev(0, 1, 1)}};
  auto v = validate_input_instance(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].kind, InputViolation::Kind::WrongStream);
}

TEST(ValidateInput, AcceptsExactlyTheBruteForceInstances) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    auto s = random_streams(rng, rng() % 2 == 0, 200);
    bool ok = true;
    for (StreamId i = 0; i < s.size(); ++i) {
      for (std::size_t x = 0; x < s[i].size(); ++x) {
        if (x > 0 && !(order_of(s[i][x - 1]) < order_of(s[i][x]))) ok = false;
        if (is_heartbeat(s[i][x])) continue;
        for (StreamId j = 0; j < s.size(); ++j) {
          if (j == i) continue;
          bool later = false;
          for (const auto& y : s[j]) later = later || order_of(s[i][x]) < order_of(y);
          if (!later) ok = false;
        }
      }
    }
    EXPECT_EQ(validate_input_instance(s).empty(), ok) << "trial " << trial;
  }
}

TEST(ItagsIn, CollectsEventAndHeartbeatTags) {
  Streams s{{ev(2, 0, 1), hb(0, 0, 5)}, {ev(1, 1, 2)}};
  auto t = itags_in(s);
  EXPECT_EQ(t, (std::vector<ImplTag>{{0, 0}, {1, 1}, {2, 0}}));
}
