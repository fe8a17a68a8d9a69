#include "offroad/orpo.hpp"
#include "offroad/preference_mining.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace offroad;

namespace
{

SequenceLogProb probs(std::initializer_list<double> ps)
{
  SequenceLogProb s;
  for (double p : ps) s.token_logprobs.push_back(std::log(p));
  return s;
}

std::vector<int> random_ids(SplitMix64 & rng, std::size_t n, std::size_t v)
{
  std::vector<int> out(n);
  for (auto & t : out) t = static_cast<int>(rng.below(v));
  return out;
}

}  // namespace

TEST(SequenceProb, Examples)
{
  EXPECT_NEAR(sequence_prob(probs({0.5, 0.5, 0.5, 0.5}), true), 0.5, 1e-15);
  EXPECT_NEAR(sequence_prob(probs({0.9}), true), 0.9, 1e-15);
  EXPECT_NEAR(sequence_prob(probs({0.9, 0.4}), true), 0.6, 1e-15);
  EXPECT_NEAR(sequence_prob(probs({0.9, 0.4}), false), 0.36, 1e-15);
  EXPECT_EQ(sequence_prob(SequenceLogProb{{0.0}}, true), 1.0 - probability_clamp);
  EXPECT_EQ(sequence_prob(SequenceLogProb{{-1000.0}}, true), probability_clamp);
}

TEST(SequenceProb, Validation)
{
  EXPECT_THROW(sequence_logprob(SequenceLogProb{}, true), InvalidInput);
  EXPECT_THROW(sequence_logprob(SequenceLogProb{{0.1}}, true), InvalidInput);
  EXPECT_THROW(sequence_logprob(SequenceLogProb{{-INFINITY}}, true), InvalidInput);
}

TEST(Odds, Examples)
{
  EXPECT_EQ(odds(0.5), 1.0);
  EXPECT_NEAR(odds(0.9), 9.0, 1e-12);
  EXPECT_NEAR(odds(0.1), 1.0 / 9.0, 1e-15);
}

TEST(OddsLoss, Examples)
{
  EXPECT_NEAR(odds_loss(probs({0.3, 0.7}), probs({0.3, 0.7})), std::log(2.0), 1e-12);
  EXPECT_NEAR(odds_loss(probs({0.9}), probs({0.5})), 0.10536051565782630, 1e-12);
}

TEST(OddsLoss, DecreasesAsChosenImproves)
{
  double prev = INFINITY;
  for (double p = 0.05; p < 0.999; p += 0.01) {
    const double l = odds_loss(probs({p}), probs({0.5}));
    EXPECT_LT(l, prev);
    prev = l;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(OddsLoss, FiniteOverWideRange)
{
  SplitMix64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    SequenceLogProb a, b;
    for (int k = 0; k < 5; ++k) {
      a.token_logprobs.push_back(rng.uniform(-50, 0));
      b.token_logprobs.push_back(rng.uniform(-50, 0));
    }
    for (bool norm : {true, false}) {
      const auto r = orpo_loss(a, b, {0.1, norm});
      EXPECT_TRUE(std::isfinite(r.total));
      EXPECT_GE(r.odds, 0.0);
      for (double g : orpo_loss_gradient(a, b, {0.1, norm}).d_chosen) EXPECT_TRUE(std::isfinite(g));
    }
  }
}

TEST(OrpoLoss, RegressionFixture)
{
  const auto r = orpo_loss(probs({0.8}), probs({0.6}), {0.1, true});
  EXPECT_NEAR(r.sft, 0.22314355131420976, 1e-15);
  EXPECT_NEAR(r.log_odds_chosen - r.log_odds_rejected, 0.98082925301172624, 1e-14);
  EXPECT_NEAR(r.odds, 0.31845373111853459, 1e-14);
  EXPECT_NEAR(r.total, 0.25498892442606322, 1e-14);
}

TEST(OrpoLoss, ZeroLambdaIsSft)
{
  SplitMix64 rng(4);
  for (int i = 0; i < 200; ++i) {
    SequenceLogProb a, b;
    for (std::size_t k = 0; k < 1 + rng.below(10); ++k) a.token_logprobs.push_back(rng.uniform(-5, 0));
    for (std::size_t k = 0; k < 1 + rng.below(10); ++k) b.token_logprobs.push_back(rng.uniform(-5, 0));
    for (bool norm : {true, false}) {
      const auto r = orpo_loss(a, b, {0.0, norm});
      EXPECT_EQ(r.total, r.sft);
      EXPECT_EQ(r.sft, -sequence_logprob(a, norm));
    }
  }
}

TEST(OrpoLoss, CertainChosenNearZero)
{
  const auto r = orpo_loss(SequenceLogProb{{0.0, 0.0}}, probs({0.5}), {0.1, true});
  EXPECT_EQ(r.sft, 0.0);
  EXPECT_LT(r.total, 1e-11);
}

TEST(OrpoGradient, MatchesFiniteDifferencesOnLogprobs)
{
  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) {
    SequenceLogProb a, b;
    for (int k = 0; k < 4; ++k) a.token_logprobs.push_back(rng.uniform(-3, -0.05));
    for (int k = 0; k < 6; ++k) b.token_logprobs.push_back(rng.uniform(-3, -0.05));
    const OrpoParams p{rng.uniform(0, 1), rng.uniform() < 0.5};
    const auto g = orpo_loss_gradient(a, b, p);
    for (std::size_t k = 0; k < a.length(); ++k) {
      auto up = a, dn = a;
      up.token_logprobs[k] += 1e-6;
      dn.token_logprobs[k] -= 1e-6;
      const double fd = (orpo_loss(up, b, p).total - orpo_loss(dn, b, p).total) / 2e-6;
      EXPECT_NEAR(g.d_chosen[k], fd, 1e-7);
    }
    for (std::size_t k = 0; k < b.length(); ++k) {
      auto up = b, dn = b;
      up.token_logprobs[k] += 1e-6;
      dn.token_logprobs[k] -= 1e-6;
      const double fd = (orpo_loss(a, up, p).total - orpo_loss(a, dn, p).total) / 2e-6;
      EXPECT_NEAR(g.d_rejected[k], fd, 1e-7);
    }
  }
}

TEST(ToyPolicy, RowsAreDistributions)
{
  ToyPolicy policy(8, 3, 64, 1);
  const std::vector<int> prompt{1, 2, 3};
  double total = 0.0;
  for (int tok = 0; tok < 8; ++tok) {
    const std::vector<int> target{tok};
    total += std::exp(policy.score_ids(prompt, target).token_logprobs[0]);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(ToyPolicy, GradCheckRandomInstances)
{
  SplitMix64 rng(6);
  for (int i = 0; i < 20; ++i) {
    ToyPolicy policy(8, 2, 16, rng.next());
    const auto prompt = random_ids(rng, 4, 8);
    const auto chosen = random_ids(rng, 12, 8);
    const auto rejected = random_ids(rng, 12, 8);
    EXPECT_LT(toy_policy_grad_check(policy, prompt, chosen, rejected, {0.5, true}), 1e-5);
  }
}

TEST(ToyPolicy, ZeroLambdaGradientIsNllGradient)
{
  SplitMix64 rng(7);
  ToyPolicy policy(8, 2, 16, 3);
  const auto prompt = random_ids(rng, 3, 8);
  const auto chosen = random_ids(rng, 10, 8);
  const auto rejected = random_ids(rng, 10, 8);
  const auto g = orpo_gradient_wrt_logits(policy, prompt, chosen, rejected, {0.0, true});
  std::vector<double> nll(g.size(), 0.0);
  std::vector<double> d(chosen.size(), -1.0 / static_cast<double>(chosen.size()));
  policy.accumulate_gradient(prompt, chosen, d, nll);
  EXPECT_EQ(g, nll);
}

TEST(ToyPolicy, IdenticalSequencesHaveNoOddsGradient)
{
  SplitMix64 rng(8);
  ToyPolicy policy(8, 2, 16, 4);
  const auto prompt = random_ids(rng, 3, 8);
  const auto seq = random_ids(rng, 10, 8);
  const auto with = orpo_gradient_wrt_logits(policy, prompt, seq, seq, {0.7, true});
  const auto without = orpo_gradient_wrt_logits(policy, prompt, seq, seq, {0.0, true});
  ASSERT_EQ(with.size(), without.size());
  for (std::size_t k = 0; k < with.size(); ++k) EXPECT_NEAR(with[k], without[k], 1e-15);
}

TEST(Tokens, SplitIsLossless)
{
  const std::string text = "<image>a/b.jpg</image>\nTurn left.<trajectory>[1.00,-2.50,0.00]";
  const auto toks = split_tokens(text);
  std::string joined;
  for (const auto & t : toks) joined += t;
  EXPECT_EQ(joined, text);
  EXPECT_EQ(toks.front(), "<image>");
  EXPECT_NE(std::find(toks.begin(), toks.end(), "<trajectory>"), toks.end());
}

TEST(Adapters, ToyAdapterGradCheckOnPair)
{
  PreferencePair pair;
  pair.prompt = "<image>x.jpg</image>\nDrive.";
  pair.chosen = "Up.<trajectory>[1.00,2.00,0.50]";
  pair.rejected = "Up.<trajectory>[1.00,2.00,0.90]";
  const std::vector<std::string> texts{pair.prompt, pair.chosen, pair.rejected};
  auto vocab = ToyPolicyAdapter::vocabulary_for(texts);
  const std::size_t v = vocab.size();
  ToyPolicyAdapter adapter(std::move(vocab), ToyPolicy(v, 3, 32, 11));
  EXPECT_LT(toy_policy_grad_check(adapter, pair, {0.1, true}), 1e-5);
  const auto b = orpo_for_pair(adapter, pair, {0.1, true});
  EXPECT_TRUE(std::isfinite(b.total));
}

TEST(Adapters, RecordedPolicy)
{
  RecordedPolicy policy;
  policy.add("p", "c", probs({0.8}));
  policy.add("p", "r", probs({0.6}));
  PreferencePair pair;
  pair.prompt = "p";
  pair.chosen = "c";
  pair.rejected = "r";
  EXPECT_NEAR(orpo_for_pair(policy, pair).total, 0.25498892442606322, 1e-14);
  pair.rejected = "missing";
  EXPECT_THROW(orpo_for_pair(policy, pair), NotFound);
  EXPECT_THROW(policy.add("p", "bad", SequenceLogProb{{0.5}}), InvalidInput);
}
