// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "dgs/apps.hpp"
#include "dgs/wire.hpp"
#include "support.hpp"

using namespace dgs;

namespace {

std::vector<Event> events(const Alphabet& a, std::initializer_list<const char*> tags, StreamId stream = 0) {
  std::vector<Event> out;
  Timestamp ts = 0;
  for (auto t : tags) out.push_back(Event{{a.id(t), stream}, ++ts, Value(0)});
  return out;
}

std::vector<Value> values(const std::vector<Output>& outs) {
  std::vector<Value> v;
  for (const auto& o : outs) v.push_back(o.value);
  return v;
}

}  // namespace

TEST(SequentialSpec, KeyCounterExample) {
  auto p = key_counter_program(2);
  auto out = sequential_spec(p, events(p.alphabet, {"i(1)", "i(2)", "r(1)", "i(2)", "r(1)"}));
  EXPECT_EQ(values(out), (std::vector<Value>{1, 0}));
  EXPECT_EQ(out[0].ts, 3U);
  EXPECT_EQ(out[1].ts, 5U);
}

TEST(SequentialSpec, EmptyInput) {
  auto p = key_counter_program(2);
  EXPECT_TRUE(sequential_spec(p, {}).empty());
}

TEST(SequentialSpec, ValueBarrierSums) {
  auto p = value_barrier_program(1);
  auto a = p.alphabet.id("a(1)"), b = p.alphabet.id("b");
  std::vector<Event> in{{{a, 1}, 1, Value(2)}, {{a, 1}, 2, Value(3)}, {{b, 0}, 3, Value(0)}};
  EXPECT_EQ(values(sequential_spec(p, in)), (std::vector<Value>{5}));
}

TEST(SequentialSpec, UnknownTag) {
  auto p = key_counter_program(1);
  std::vector<Event> in{{{99, 0}, 1, Value(0)}};
  try {
    sequential_spec(p, in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTag);
  }
}

TEST(SequentialSpec, PrefixMonotone) {
  std::mt19937_64 rng(4);
  for (const auto& name : app_names()) {
    GenConfig cfg;
    cfg.streams = 2;
    cfg.events_per_stream = 30;
    cfg.sync_ratio = 4;
    cfg.get_every = 5;
    cfg.seed = rng();
    auto app = make_app(name, cfg);
    auto input = sort_streams(app->generate(cfg));
    ASSERT_LE(input.size(), 100U);
    auto full = app->sequential(input);
    for (std::size_t n = 0; n <= input.size(); ++n) {
      std::vector<Event> prefix(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(n));
      auto part = app->sequential(prefix);
      ASSERT_LE(part.size(), full.size());
      for (std::size_t i = 0; i < part.size(); ++i) ASSERT_EQ(part[i], full[i]) << name << " prefix " << n;
    }
  }
}

TEST(Program, ValidateAcceptsShippedPrograms) {
  EXPECT_TRUE(key_counter_program(3).validate().empty());
  EXPECT_TRUE(value_barrier_program(3).validate().empty());
  EXPECT_TRUE(page_view_program(3).validate().empty());
  EXPECT_TRUE(fraud_program(3).validate().empty());
}

TEST(Program, ValidateFlagsAsymmetricRelation) {
  auto p = key_counter_program(1);
  p.rel.add_directed(p.alphabet.id("i(1)"), p.alphabet.id("i(1)"));
  p.rel.remove(p.alphabet.id("r(1)"), p.alphabet.id("i(1)"));
  p.rel.add_directed(p.alphabet.id("r(1)"), p.alphabet.id("i(1)"));
  EXPECT_FALSE(p.validate().empty());
}

TEST(Program, ApplyRejectsEventsOutsidePredicate) {
  auto p = key_counter_program(1);
  p.state_types.push_back({"narrow", TagSet(p.alphabet.size()), p.state_types[0].update});
  CounterState s;
  std::vector<Output> out;
  EXPECT_THROW(p.apply(1, s, Event{{0, 0}, 1, Value(0)}, out), Error);
}

TEST(WireDiagram, NoParIsSequential) {
  auto p = key_counter_program(2);
  auto in = events(p.alphabet, {"i(1)", "r(1)", "i(2)", "r(2)", "r(1)"});
  auto d = WireDiagram::seq({WireDiagram::leaf({in[0], in[1]}), WireDiagram::leaf({in[2], in[3], in[4]})});
  EXPECT_EQ(eval_wire_diagram(p, d, 1), sequential_spec(p, in));
}

TEST(WireDiagram, NestedParsOverOneKey) {
  auto p = key_counter_program(1);
  auto in = events(p.alphabet, {"r(1)", "i(1)", "i(1)", "i(1)", "r(1)"});
  auto n = p.alphabet.size();
  TagSet inc(n, {p.alphabet.id("i(1)")});
  auto inner = WireDiagram::par(0, 0, inc, inc, WireDiagram::leaf({in[2]}), WireDiagram::leaf({in[3]}));
  auto d = WireDiagram::seq({WireDiagram::leaf({in[0]}),
                             WireDiagram::par(0, 0, inc, inc, WireDiagram::leaf({in[1]}), inner),
                             WireDiagram::leaf({in[4]})});
  EXPECT_EQ(d.par_count(), 2U);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    std::vector<Output> want{{Value(0), 1}, {Value(3), 5}};
    EXPECT_TRUE(same_multiset(eval_wire_diagram(p, d, seed), want));
  }
}

TEST(WireDiagram, EmptyLegsRestoreState) {
  auto p = key_counter_program(2);
  auto in = events(p.alphabet, {"i(1)", "i(1)", "r(1)"});
  auto n = p.alphabet.size();
  TagSet k1(n, {p.alphabet.id("i(1)"), p.alphabet.id("r(1)")});
  TagSet k2(n, {p.alphabet.id("i(2)"), p.alphabet.id("r(2)")});
  auto d = WireDiagram::seq({WireDiagram::leaf({in[0], in[1]}),
                             WireDiagram::par(0, 0, k1, k2, WireDiagram::leaf({}), WireDiagram::leaf({})),
                             WireDiagram::leaf({in[2]})});
  EXPECT_EQ(values(eval_wire_diagram(p, d, 0)), (std::vector<Value>{2}));
}

TEST(WireDiagram, KeyPartitionedPar) {
  auto p = key_counter_program(2);
  auto in = events(p.alphabet, {"i(1)", "i(2)", "i(2)", "r(1)", "r(2)"});
  auto n = p.alphabet.size();
  TagSet k1(n, {p.alphabet.id("i(1)"), p.alphabet.id("r(1)")});
  TagSet k2(n, {p.alphabet.id("i(2)"), p.alphabet.id("r(2)")});
  auto d = WireDiagram::par(0, 0, k1, k2, WireDiagram::leaf({in[0], in[3]}), WireDiagram::leaf({in[1], in[2], in[4]}));
  EXPECT_TRUE(same_multiset(eval_wire_diagram(p, d, 3), sequential_spec(p, in)));
}

TEST(WireDiagram, RejectsDependentLegs) {
  auto p = key_counter_program(1);
  auto n = p.alphabet.size();
  auto d = WireDiagram::par(0, 0, TagSet(n, {p.alphabet.id("r(1)")}), TagSet(n, {p.alphabet.id("i(1)")}),
                            WireDiagram::leaf({}), WireDiagram::leaf({}));
  try {
    eval_wire_diagram(p, d, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDiagram);
  }
}

TEST(WireDiagram, RejectsEventOutsideLeg) {
  auto p = key_counter_program(2);
  auto in = events(p.alphabet, {"i(2)"});
  auto n = p.alphabet.size();
  TagSet k1(n, {p.alphabet.id("i(1)")});
  auto d = WireDiagram::par(0, 0, k1, k1, WireDiagram::leaf(in), WireDiagram::leaf({}));
  EXPECT_THROW(eval_wire_diagram(p, d, 0), Error);
}

TEST(RandomWireDiagram, DepthZeroIsOneLeaf) {
  auto p = key_counter_program(2);
  auto in = events(p.alphabet, {"i(1)", "i(2)", "r(1)"});
  auto d = random_wire_diagram(p, in, 0, 5);
  ASSERT_TRUE(std::holds_alternative<WireLeaf>(d.node));
  EXPECT_EQ(std::get<WireLeaf>(d.node).segment.size(), 3U);
}

TEST(RandomWireDiagram, LeavesPartitionInput) {
  auto p = key_counter_program(3);
  std::mt19937_64 rng(8);
  std::size_t pars = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Event> in;
    for (Timestamp t = 1; t <= 40; ++t) in.push_back(Event{{static_cast<TagId>(rng() % 6), 0}, t, Value(0)});
    auto d = random_wire_diagram(p, in, 1 + static_cast<int>(rng() % 4), rng());
    auto got = d.events();
    ASSERT_EQ(got.size(), in.size());
    std::vector<Timestamp> a, b;
    for (const auto& e : got) a.push_back(e.ts);
    for (const auto& e : in) b.push_back(e.ts);
    std::sort(a.begin(), a.end());
    EXPECT_EQ(a, b);
    EXPECT_NO_THROW(eval_wire_diagram(p, d, rng()));
    pars += d.par_count();
  }
  EXPECT_GT(pars, 100U);
}

// Every valid diagram over a consistent program agrees with the sequential
// fold up to output order.
TEST(RandomWireDiagram, AgreesWithSequentialFold) {
  std::mt19937_64 rng(21);
  for (const auto& name : app_names()) {
    for (int trial = 0; trial < 500; ++trial) {
      auto cfg = dgs::testing::random_config(rng, 4, 300);
      auto app = make_app(name, cfg);
      auto input = sort_streams(app->generate(cfg));
      auto depth = 1 + static_cast<int>(rng() % 4);
      auto seed = rng();
      auto got = app->eval_random_wire(input, depth, seed);
      ASSERT_TRUE(same_multiset(got, app->sequential(input))) << name << " trial " << trial;
    }
  }
}
