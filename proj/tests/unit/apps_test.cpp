// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "dgs/apps.hpp"
#include "dgs/trace.hpp"
#include "support.hpp"

using namespace dgs;

namespace {

template <class S>
std::vector<Value> run_seq(const Program<S>& p, const std::vector<std::pair<std::string, Value>>& evs) {
  std::vector<Event> input;
  Timestamp ts = 0;
  for (const auto& [tag, payload] : evs) input.push_back(Event{{p.alphabet.id(tag), 0}, ++ts, payload});
  std::vector<Value> out;
  for (const auto& o : sequential_spec(p, input)) out.push_back(o.value);
  return out;
}

std::string trace_of(const AnyApp& app, const Streams& s) {
  std::ostringstream out;
  write_trace(out, s, app.signature().alphabet);
  return out.str();
}

}  // namespace

TEST(KeyCounter, NoResetNoOutput) {
  auto p = key_counter_program(2);
  EXPECT_TRUE(run_seq(p, {{"i(1)", 0}, {"i(2)", 0}, {"i(1)", 0}}).empty());
  EXPECT_EQ(run_seq(p, {{"i(1)", 0}, {"i(1)", 0}, {"r(1)", 0}, {"r(2)", 0}}), (std::vector<Value>{2, 0}));
}

TEST(ValueBarrier, SumsSinceLastBarrier) {
  auto p = value_barrier_program(1);
  EXPECT_EQ(run_seq(p, {{"a(1)", 1}, {"a(1)", 2}, {"a(1)", 3}, {"b", 0}}), (std::vector<Value>{6}));
  EXPECT_EQ(run_seq(p, {{"b", 0}}), (std::vector<Value>{0}));
  EXPECT_EQ(run_seq(p, {{"a(1)", 1}, {"b", 0}, {"a(1)", 2}, {"b", 0}}), (std::vector<Value>{1, 2}));
}

TEST(PageView, ViewsReadLatestAddress) {
  auto p = page_view_program(2);
  auto out = run_seq(p, {{"page_view(1)", 0}, {"update_user_address(1)", 7}, {"page_view(1)", 0},
                         {"get_user_address(2)", 0}});
  ASSERT_EQ(out.size(), 4U);
  EXPECT_EQ(out[0]["zipcode"], "no_zipcode");
  EXPECT_EQ(out[1]["event"], "update_user_address");
  EXPECT_EQ(out[2]["zipcode"], 7);
  EXPECT_EQ(out[2]["uid"], 1);
  EXPECT_EQ(out[3]["zipcode"], "no_zipcode");
}

TEST(PageView, DistinctUsersCommute) {
  auto p = page_view_program(2);
  Event a{{p.alphabet.id("update_user_address(1)"), 0}, 1, Value(5)};
  Event b{{p.alphabet.id("page_view(2)"), 1}, 1, Value(0)};
  EXPECT_FALSE(p.rel.depends(a.tag(), b.tag()));
  EXPECT_TRUE(check_c3(p, 0, CounterState{{2, 9}}, a, b).pass);
}

TEST(Fraud, FlagsMatchesOfLastRule) {
  auto p = fraud_program(1);
  // No rule yet: the modulus is 0.
  auto fresh = run_seq(p, {{"a(1)", 2000}, {"a(1)", 2001}});
  ASSERT_EQ(fresh.size(), 1U);
  EXPECT_EQ(fresh[0]["fraud"], 2000);
  // A rule at ts 4 sets the modulus to 5.
  auto ruled = run_seq(p, {{"a(1)", 1}, {"a(1)", 2}, {"a(1)", 3}, {"b", 0}, {"a(1)", 1005}, {"a(1)", 6}});
  ASSERT_EQ(ruled.size(), 2U);
  EXPECT_EQ(ruled[0]["sum"], 6);
  EXPECT_EQ(ruled[1]["fraud"], 1005);
}

TEST(Fraud, JoinAddsSumsAndKeepsRule) {
  auto p = fraud_program(2);
  auto j = p.joins[0].fn(FraudState{3, 41}, FraudState{4, 41});
  EXPECT_EQ(j.sum, 7);
  EXPECT_EQ(j.rule_ts, 41);
  EXPECT_EQ(p.joins[0].fn(FraudState{0, 12}, FraudState{0, 40}).rule_ts, 40);
}

TEST(Generate, LayoutAndBarrierRatio) {
  GenConfig cfg;
  cfg.streams = 2;
  cfg.events_per_stream = 10;
  cfg.sync_ratio = 5;
  cfg.heartbeat_period = 3;
  auto app = make_app("value-barrier", cfg);
  auto s = app->generate(cfg);
  ASSERT_EQ(s.size(), 3U);
  std::size_t barriers = 0;
  for (const auto& m : s[0]) barriers += is_heartbeat(m) ? 0 : 1;
  EXPECT_EQ(barriers, 2U);
  for (StreamId k = 1; k <= 2; ++k) {
    std::size_t n = 0;
    for (const auto& m : s[k]) n += is_heartbeat(m) ? 0 : 1;
    EXPECT_EQ(n, 10U);
  }
  EXPECT_TRUE(validate_input_instance(s).empty());
}

TEST(Generate, DeterministicPerSeed) {
  for (const auto& name : app_names()) {
    GenConfig cfg;
    cfg.events_per_stream = 200;
    cfg.sync_ratio = 7;
    auto app = make_app(name, cfg);
    auto a = trace_of(*app, app->generate(cfg));
    EXPECT_EQ(a, trace_of(*app, app->generate(cfg))) << name;
    cfg.seed = 2;
    EXPECT_NE(a, trace_of(*app, app->generate(cfg))) << name;
  }
}

TEST(Generate, PageViewsHitTwoUsers) {
  GenConfig cfg;
  cfg.keys = 5;
  cfg.events_per_stream = 300;
  cfg.get_every = 4;
  auto app = make_app("page-view", cfg);
  auto p = page_view_program(5);
  auto s = app->generate(cfg);
  std::set<std::int64_t> viewed;
  for (StreamId k = 1; k < 3; ++k) {
    for (const auto& m : s[k]) {
      if (!is_heartbeat(m)) viewed.insert(*p.alphabet.tag(itag_of(m).tag).key);
    }
  }
  EXPECT_EQ(viewed, (std::set<std::int64_t>{1, 2}));
}

TEST(Generate, RandomConfigsAreValidInputs) {
  std::mt19937_64 rng(12);
  for (const auto& name : app_names()) {
    for (int i = 0; i < 40; ++i) {
      auto cfg = dgs::testing::random_config(rng, 5, 2000);
      auto s = make_app(name, cfg)->generate(cfg);
      EXPECT_TRUE(validate_input_instance(s).empty()) << name;
      EXPECT_EQ(s.size(), cfg.streams + 1);
      EXPECT_LE(dgs::testing::event_count(s), 2000U) << name;
    }
  }
}

TEST(MakeApp, UnknownName) {
  try {
    make_app("nope", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
  EXPECT_EQ(app_names().size(), 4U);
}
