#include <gtest/gtest.h>

#include <random>

#include "hssps/heuristics.hpp"
#include "support/oracles.hpp"

using namespace hssps;

namespace {

// a0: 10 live ec2, newest. a1: 5 live + 5 deleted ec2. a2: 10 live s3, oldest.
Corpus three_accounts() {
  Corpus c;
  for (int i = 0; i < 10; ++i) c.push_back(oracle::record("t000-a0000", Service::ec2, false, "us-east-1", 100));
  for (int i = 0; i < 10; ++i) c.push_back(oracle::record("t000-a0001", Service::ec2, i < 5, "us-east-1", 50));
  for (int i = 0; i < 10; ++i) c.push_back(oracle::record("t000-a0002", Service::s3, false, "us-east-1", 10));
  return c;
}

std::vector<std::string> values_of(const ValueRanking& r) {
  std::vector<std::string> out;
  for (const auto& v : r) out.push_back(v.value);
  return out;
}

HeuristicConfig only(HeuristicMix mix) {
  HeuristicConfig c;
  c.mix = mix;
  return c;
}

struct Env {
  std::shared_ptr<const Corpus> corpus;
  TableLayout layout;
  Snapshot snap;
  explicit Env(Corpus c)
      : corpus(std::make_shared<const Corpus>(std::move(c))), layout(corpus), snap(*refresh({}, *corpus, 0).snapshot) {}
};

Corpus many_accounts(std::size_t n, std::uint64_t seed) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.accounts_per_tenant = SizeDistribution::fixed_size(n);
  spec.resources_per_account = SizeDistribution::zipf(120, 0.9);
  spec.deleted_ratio_range = {0.0, 0.5};
  return generate_corpus(spec);
}

}  // namespace

TEST(Ranking, SingletonTenant) {
  const Env e({oracle::record("t000-a0000")});
  const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000"), {}, HeuristicConfig{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.front().value, "t000-a0000");
  EXPECT_TRUE(rank_values(e.snap, "t999", parse_query("tenant=t999"), {}, HeuristicConfig{}).empty());
}

TEST(Ranking, ActiveRatioOrdersResourceCountHeuristic) {
  const Env e(three_accounts());
  EXPECT_DOUBLE_EQ(active_ratio(e.snap, "t000-a0001", KeyField::account), 0.5);
  EXPECT_DOUBLE_EQ(active_ratio(e.snap, "nowhere", KeyField::account), 1.0);
  const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000"), {}, only({0, 1, 0}));
  EXPECT_EQ(values_of(r), (std::vector<std::string>{"t000-a0000", "t000-a0002", "t000-a0001"}));
  EXPECT_DOUBLE_EQ(r.back().score, 0.5);
}

TEST(Ranking, RecencyRanksNewestFirst) {
  const Env e(three_accounts());
  const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000"), {}, only({1, 0, 0}));
  EXPECT_EQ(values_of(r), (std::vector<std::string>{"t000-a0000", "t000-a0001", "t000-a0002"}));
  EXPECT_DOUBLE_EQ(r.front().score, 1.0);
  EXPECT_DOUBLE_EQ(r.back().score, 0.0);
}

TEST(Ranking, ServiceMatchFavoursAccountsHoldingTheService) {
  const Env e(three_accounts());
  const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000 and service=s3"), {}, only({0, 0, 1}));
  EXPECT_EQ(r.front().value, "t000-a0002");
  EXPECT_DOUBLE_EQ(r.front().score, 1.0);
  EXPECT_DOUBLE_EQ(r[1].score, 0.0);

  // Nobody runs eks: the relevance term contributes nothing.
  const auto none = rank_values(e.snap, "t000", parse_query("tenant=t000 and service=eks"), {}, HeuristicConfig{});
  const auto base = rank_values(e.snap, "t000", parse_query("tenant=t000 and service=eks"), {}, only({0.25, 0.25, 0}));
  EXPECT_EQ(none, base);
}

TEST(Ranking, DefaultMixDependsOnServicePredicate) {
  HeuristicConfig c;
  EXPECT_EQ(c.effective_mix(true), (HeuristicMix{0.25, 0.25, 0.5}));
  EXPECT_EQ(c.effective_mix(false), (HeuristicMix{0.5, 0.5, 0.0}));
}

TEST(Ranking, ExclusionIsSoundAndComplete) {
  const Env e(many_accounts(40, 3));
  const auto universe = partition_universe(e.snap, "t000", KeyField::account);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::set<std::string> excluded;
    for (const auto& v : universe) {
      if (rng() % 3 == 0) excluded.insert(v);
    }
    const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000 and service=ec2"), excluded, HeuristicConfig{});
    std::set<std::string> seen;
    for (const auto& v : r) {
      EXPECT_FALSE(excluded.count(v.value));
      EXPECT_TRUE(seen.insert(v.value).second);
    }
    EXPECT_EQ(seen.size() + excluded.size(), universe.size());
  }
}

TEST(Ranking, ScoreMonotoneInActiveRatio) {
  const Env e(many_accounts(20, 5));
  const auto q = parse_query("tenant=t000");
  const auto old = rank_values(e.snap, "t000", q, {}, only({0, 1, 0}));
  int raised = 0;
  for (const auto& target : e.snap.accounts_of("t000")) {
    Snapshot better = e.snap;
    auto& s = better.accounts.at(target);
    if (s.deleted_count == 0) continue;
    s.active_count += s.deleted_count;
    s.deleted_count = 0;
    const auto after = rank_values(better, "t000", q, {}, only({0, 1, 0}));
    auto score_of = [&](const ValueRanking& r) {
      return std::find_if(r.begin(), r.end(), [&](const RankedValue& v) { return v.value == target; })->score;
    };
    EXPECT_GT(score_of(after), score_of(old)) << target;
    ++raised;
  }
  EXPECT_GT(raised, 0);
}

TEST(Ranking, ColdStartFallsBackToRoundRobin) {
  const Env e(three_accounts());
  HeuristicConfig c;
  c.cold_start_threshold = 3600;
  const auto r = rank_values(e.snap, "t000", parse_query("tenant=t000"), {}, c);
  for (const auto& v : r) EXPECT_EQ(v.score, 0.0);
  EXPECT_EQ(values_of(r), (std::vector<std::string>{"t000-a0000", "t000-a0001", "t000-a0002"}));
  EXPECT_EQ(rotate(r, 1).front().value, "t000-a0001");
  EXPECT_EQ(rotate(r, 5).front().value, "t000-a0002");

  // Enough history: heuristics engage again.
  auto aged = refresh(refresh({}, *e.corpus, 0), *e.corpus, 3600);
  const auto warm = rank_values(*aged.snapshot, "t000", parse_query("tenant=t000"), {}, c);
  EXPECT_GT(warm.front().score, 0.0);
}

TEST(Rotate, IdentityWhenScoresDistinct) {
  const ValueRanking r{{"a", 3}, {"b", 2}, {"c", 1}};
  for (std::uint64_t k = 0; k < 10; ++k) EXPECT_EQ(rotate(r, k), r);
  EXPECT_TRUE(rotate({}, 4).empty());
}

TEST(Rotate, EqualBandsShareTheLeadEvenly) {
  ValueRanking r{{"top", 9}};
  for (int i = 0; i < 7; ++i) r.push_back({"v" + std::to_string(i), 1.0});
  r.push_back({"tail", 0});
  std::map<std::string, int> leads;
  for (std::uint64_t k = 0; k < 70; ++k) {
    const auto rot = rotate(r, k);
    EXPECT_EQ(rot.front().value, "top");
    EXPECT_EQ(rot.back().value, "tail");
    ++leads[rot[1].value];
  }
  ASSERT_EQ(leads.size(), 7u);
  for (const auto& [v, n] : leads) EXPECT_EQ(n, 10) << v;
}

TEST(Rotate, UniformScoresCoverEveryValueWithinUniverseSizeSelections) {
  const Env e(many_accounts(23, 8));
  HeuristicConfig c;
  c.cold_start_threshold = 1'000'000;
  const auto ranking = rank_values(e.snap, "t000", parse_query("tenant=t000"), {}, c);
  std::set<std::string> selected;
  for (std::uint64_t k = 0; k < ranking.size(); ++k) {
    const auto rot = rotate(ranking, k);
    for (std::size_t i = 0; i < 4; ++i) selected.insert(rot[i].value);
  }
  EXPECT_EQ(selected.size(), ranking.size());
}

TEST(Candidates, CompositeNonIncreasingInEstimatedRows) {
  std::mt19937_64 rng(41);
  HeuristicConfig config;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PartitionCandidate> cs(2 + rng() % 5);
    for (auto& c : cs) {
      c.relevance_score = double(rng() % 100) / 100.0;
      c.plan.estimated_rows = rng() % 500;
    }
    auto heavier = cs;
    heavier[0].plan.estimated_rows += 1 + rng() % 500;
    score_candidates(cs, config);
    score_candidates(heavier, config);
    EXPECT_LE(heavier[0].composite_score, cs[0].composite_score);
  }
}

TEST(Candidates, FewerValuesThanSliceGiveOneCandidate) {
  const Env e(three_accounts());
  const auto q = parse_query("tenant=t000");
  const auto ranking = rank_values(e.snap, "t000", q, {}, HeuristicConfig{});
  const auto cands = generate_candidates(ranking, q, KeyField::account, HeuristicConfig{}, e.layout, e.snap);
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_EQ(cands[0].values.size(), 3u);
  EXPECT_EQ(cands[0].plan.path, AccessPath::partition_scoped);
  EXPECT_THROW(generate_candidates({}, q, KeyField::account, HeuristicConfig{}, e.layout, e.snap), std::logic_error);
}

TEST(Candidates, FiftyValuesGiveFiveDisjointSlices) {
  const Env e(many_accounts(50, 9));
  const auto q = parse_query("tenant=t000 and region=us-east-1");
  const auto ranking = rank_values(e.snap, "t000", q, {}, HeuristicConfig{});
  const auto cands = generate_candidates(ranking, q, KeyField::account, HeuristicConfig{}, e.layout, e.snap);
  ASSERT_EQ(cands.size(), 5u);
  std::set<std::string> all;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    EXPECT_EQ(cands[i].values.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_TRUE(all.insert(ranking[i * 10 + j].value).second);
    std::vector<std::string> expect;
    for (std::size_t j = 0; j < 10; ++j) expect.push_back(ranking[i * 10 + j].value);
    std::sort(expect.begin(), expect.end());
    EXPECT_EQ(cands[i].values, expect);
  }
  EXPECT_EQ(all.size(), 50u);
}

TEST(Candidates, ShortTailSliceIsPulledBack) {
  const Env e(many_accounts(25, 4));
  const auto q = parse_query("tenant=t000");
  const auto ranking = rank_values(e.snap, "t000", q, {}, HeuristicConfig{});
  const auto cands = generate_candidates(ranking, q, KeyField::account, HeuristicConfig{}, e.layout, e.snap);
  ASSERT_EQ(cands.size(), 3u);
  std::vector<std::string> tail;
  for (std::size_t j = 15; j < 25; ++j) tail.push_back(ranking[j].value);
  std::sort(tail.begin(), tail.end());
  EXPECT_EQ(cands[2].values, tail);
}

TEST(Candidates, RelevanceAndPenaltyFromIndependentArithmetic) {
  const Env e(many_accounts(40, 12));
  const auto q = parse_query("tenant=t000 and service in (ec2,s3)");
  HeuristicConfig config;
  config.weight_relevance = 2.0;
  config.weight_cost = 0.5;
  const auto ranking = rank_values(e.snap, "t000", q, {}, config);
  const auto cands = generate_candidates(ranking, q, KeyField::account, config, e.layout, e.snap);
  std::uint64_t max_rows = 0;
  for (const auto& c : cands) max_rows = std::max(max_rows, c.plan.estimated_rows);
  ASSERT_GT(max_rows, 0u);
  for (const auto& c : cands) {
    double sum = 0;
    for (const auto& v : c.values) {
      const auto& s = e.snap.accounts.at(v);
      sum += s.total() == 0 ? 1.0 : double(s.active_count) / double(s.total());
    }
    EXPECT_NEAR(c.relevance_score, sum / double(c.values.size()), 1e-12);
    EXPECT_NEAR(c.cost_penalty, double(c.plan.estimated_rows) / double(max_rows), 1e-12);
    EXPECT_LE(c.cost_penalty, 1.0);
    EXPECT_NEAR(c.composite_score, 2.0 * c.relevance_score - 0.5 * c.cost_penalty, 1e-12);
  }
}

TEST(SelectBest, ArgmaxWithLexicographicTieBreak) {
  auto cand = [](std::vector<std::string> values, double score) {
    PartitionCandidate c;
    c.values = std::move(values);
    c.composite_score = score;
    return c;
  };
  std::vector<PartitionCandidate> cs{cand({"b"}, 0.2), cand({"c"}, 0.7), cand({"a"}, 0.1)};
  EXPECT_EQ(select_best(cs).values, std::vector<std::string>{"c"});
  cs = {cand({"c", "d"}, 0.5), cand({"a", "z"}, 0.5), cand({"b"}, 0.4)};
  EXPECT_EQ(select_best(cs).values, (std::vector<std::string>{"a", "z"}));
  EXPECT_THROW(select_best(std::span<const PartitionCandidate>{}), std::logic_error);
}

TEST(SelectBest, InvariantUnderPositiveWeightScaling) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PartitionCandidate> cs(1 + rng() % 6);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      cs[i].values = {"v" + std::to_string(i)};
      cs[i].relevance_score = u(rng);
      cs[i].plan.estimated_rows = rng() % 1000;
    }
    HeuristicConfig base;
    base.weight_relevance = 0.5 + u(rng);
    base.weight_cost = 0.5 + u(rng);
    auto scaled = base;
    const double k = 0.25 + 4 * u(rng);
    scaled.weight_relevance *= k;
    scaled.weight_cost *= k;
    auto a = cs, b = cs;
    score_candidates(a, base);
    score_candidates(b, scaled);
    EXPECT_EQ(select_best(a).values, select_best(b).values);
  }
}

TEST(Coverage, RepeatedEventsReachEveryValue) {
  const Env e(many_accounts(37, 21));
  const auto q = parse_query("tenant=t000 and service=iam");
  const auto universe = partition_universe(e.snap, "t000", KeyField::account);
  HeuristicConfig config;
  config.values_per_candidate = 4;
  std::set<std::string> searched;
  std::size_t events = 0;
  while (searched.size() < universe.size()) {
    ASSERT_LT(events, universe.size());
    const auto ranking = rotate(rank_values(e.snap, "t000", q, searched, config), events);
    const auto cands = generate_candidates(ranking, q, KeyField::account, config, e.layout, e.snap);
    const auto before = searched.size();
    for (const auto& v : select_best(cands).values) searched.insert(v);
    EXPECT_GT(searched.size(), before);
    ++events;
  }
  EXPECT_EQ(std::vector<std::string>(searched.begin(), searched.end()), universe);
}

TEST(Universe, CompositeKeyListsAccountRegionPairs) {
  Corpus c{oracle::record("t000-a0000", Service::ec2, false, "us-east-1"),
           oracle::record("t000-a0000", Service::ec2, true, "eu-west-1"),
           oracle::record("t000-a0001", Service::ec2, false, "us-east-1")};
  const Env e(c);
  EXPECT_EQ(partition_universe(e.snap, "t000", KeyField::account_region),
            (std::vector<std::string>{"t000-a0000@eu-west-1", "t000-a0000@us-east-1", "t000-a0001@us-east-1"}));
  EXPECT_DOUBLE_EQ(active_ratio(e.snap, "t000-a0000@eu-west-1", KeyField::account_region), 0.0);
}

TEST(Signature, IgnoresInjectedPartitionValues) {
  const auto q = parse_query("tenant=t000 and service=ec2");
  EXPECT_EQ(query_signature(q), query_signature(augment(q, KeyField::account, {"t000-a0003"})));
  EXPECT_NE(query_signature(q), query_signature(parse_query("tenant=t000 and service=s3")));
  EXPECT_NE(query_signature(q), query_signature(parse_query("tenant=t001 and service=ec2")));
}

TEST(CursorStore, PerTenantAndSignature) {
  CursorStore store;
  EXPECT_EQ(store.advance("t000", 1), 0u);
  EXPECT_EQ(store.advance("t000", 1), 1u);
  EXPECT_EQ(store.advance("t000", 2), 0u);
  EXPECT_EQ(store.advance("t001", 1), 0u);
  EXPECT_EQ(store.peek("t000", 1), 2u);
  EXPECT_EQ(store.peek("t002", 1), 0u);
}

TEST(HeuristicConfig, Validation) {
  EXPECT_NO_THROW(HeuristicConfig{}.validate());
  HeuristicConfig c;
  c.candidates_per_event = 0;
  EXPECT_THROW(c.validate(), SpecError);
  c = {};
  c.weight_cost = -1;
  EXPECT_THROW(c.validate(), SpecError);
  c = {};
  c.mix = HeuristicMix{0, 0, 0};
  EXPECT_THROW(c.validate(), SpecError);
}
