// Copyright 2026 The Offroad Eval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OFFROAD__ORPO_HPP_
#define OFFROAD__ORPO_HPP_

#include "offroad/errors.hpp"
#include "offroad/preference_mining.hpp"
#include "offroad/random.hpp"
#include "offroad/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace offroad
{

inline constexpr double probability_clamp = 1e-12;

struct SequenceLogProb
{
  std::vector<double> token_logprobs{};

  std::size_t length() const noexcept { return token_logprobs.size(); }

  void validate() const
  {
    if (token_logprobs.empty()) {
      throw InvalidInput("sequence must contain at least one token");
    }
    for (const double lp : token_logprobs) {
      if (!std::isfinite(lp) || lp > 0.0) {
        throw InvalidInput("token log-probabilities must be finite and <= 0");
      }
    }
  }
};

struct OrpoParams
{
  double lambda_orpo{0.1};
  bool length_normalize{true};

  void validate() const
  {
    if (!(lambda_orpo >= 0.0) || !std::isfinite(lambda_orpo)) {
      throw InvalidInput("lambda_orpo must be non-negative");
    }
  }
};

/// Sequence log-probability: mean of token log-probs when normalized, sum otherwise.
inline double sequence_logprob(const SequenceLogProb & slp, bool length_normalize)
{
  slp.validate();
  double sum = 0.0;
  for (const double lp : slp.token_logprobs) {
    sum += lp;
  }
  return length_normalize ? sum / static_cast<double>(slp.length()) : sum;
}

/// Clamped into (eps, 1 - eps) so that the odds stay finite.
inline double sequence_prob(const SequenceLogProb & slp, bool length_normalize)
{
  return std::clamp(
    std::exp(sequence_logprob(slp, length_normalize)), probability_clamp, 1.0 - probability_clamp);
}

inline double odds(double p) { return p / (1.0 - p); }

namespace detail
{

inline double clamp_logprob(double lp) noexcept
{
  return std::clamp(lp, std::log(probability_clamp), std::log1p(-probability_clamp));
}

inline bool logprob_clamped(double lp) noexcept
{
  return lp < std::log(probability_clamp) || lp > std::log1p(-probability_clamp);
}

// log(p / (1 - p)) evaluated from log p.
inline double log_odds_from_logprob(double lp) noexcept
{
  const double c = clamp_logprob(lp);
  return c - std::log(-std::expm1(c));
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept
{
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) noexcept
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// -log sigmoid(log odds(chosen) - log odds(rejected)), all in log space.
inline double odds_loss(
  const SequenceLogProb & chosen, const SequenceLogProb & rejected, const OrpoParams & params = {})
{
  const double gap = detail::log_odds_from_logprob(sequence_logprob(chosen, params.length_normalize)) -
                     detail::log_odds_from_logprob(sequence_logprob(rejected, params.length_normalize));
  return detail::softplus(-gap);
}

struct OrpoBreakdown
{
  double sft{0.0};
  double odds{0.0};
  double total{0.0};
  double log_odds_chosen{0.0};
  double log_odds_rejected{0.0};
};

/// Negative log-likelihood of the chosen completion plus lambda_orpo times the odds-ratio term.
inline OrpoBreakdown orpo_loss(
  const SequenceLogProb & chosen, const SequenceLogProb & rejected, const OrpoParams & params = {})
{
  params.validate();
  OrpoBreakdown out;
  const double lp_c = sequence_logprob(chosen, params.length_normalize);
  const double lp_r = sequence_logprob(rejected, params.length_normalize);
  out.sft = -lp_c;
  out.log_odds_chosen = detail::log_odds_from_logprob(lp_c);
  out.log_odds_rejected = detail::log_odds_from_logprob(lp_r);
  out.odds = detail::softplus(-(out.log_odds_chosen - out.log_odds_rejected));
  out.total = out.sft + params.lambda_orpo * out.odds;
  return out;
}

/// Derivatives of the total loss with respect to each token log-probability.
struct OrpoGradient
{
  std::vector<double> d_chosen{};
  std::vector<double> d_rejected{};
};

inline OrpoGradient orpo_loss_gradient(
  const SequenceLogProb & chosen, const SequenceLogProb & rejected, const OrpoParams & params = {})
{
  params.validate();
  const double lp_c = sequence_logprob(chosen, params.length_normalize);
  const double lp_r = sequence_logprob(rejected, params.length_normalize);
  const double gap = detail::log_odds_from_logprob(lp_c) - detail::log_odds_from_logprob(lp_r);
  const double d_gap = -detail::sigmoid(-gap);

  // d log_odds / d lp = 1 / (1 - p), zero where the clamp is active.
  auto d_log_odds = [](double lp) {
    if (detail::logprob_clamped(lp)) {
      return 0.0;
    }
    return 1.0 / -std::expm1(lp);
  };
  const double d_lp_c = -1.0 + params.lambda_orpo * d_gap * d_log_odds(lp_c);
  const double d_lp_r = -params.lambda_orpo * d_gap * d_log_odds(lp_r);

  const double scale_c =
    params.length_normalize ? 1.0 / static_cast<double>(chosen.length()) : 1.0;
  const double scale_r =
    params.length_normalize ? 1.0 / static_cast<double>(rejected.length()) : 1.0;
  return {std::vector<double>(chosen.length(), d_lp_c * scale_c),
          std::vector<double>(rejected.length(), d_lp_r * scale_r)};
}

/// Lossless split of completion text into tokens: the special tags, each digit, each
/// punctuation or whitespace character, and runs of letters.
inline std::vector<std::string> split_tokens(std::string_view text)
{
  static constexpr std::string_view specials[] = {trajectory_token, "<image>", "</image>"};
  auto is_alpha = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
  };
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    for (const auto sp : specials) {
      if (text.substr(i, sp.size()) == sp) {
        out.emplace_back(sp);
        i += sp.size();
        matched = true;
        break;
      }
    }
    if (matched) {
      continue;
    }
    if (is_alpha(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_alpha(text[j])) {
        ++j;
      }
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    out.emplace_back(1, text[i]);
    ++i;
  }
  return out;
}

/// Policy adapter contract: per-token log-probabilities of `target` given `prompt`.
class PolicyAdapter
{
public:
  virtual ~PolicyAdapter() = default;
  virtual SequenceLogProb score(std::string_view prompt, std::string_view target) const = 0;
};

inline OrpoBreakdown orpo_for_pair(
  const PolicyAdapter & policy, const PreferencePair & pair, const OrpoParams & params = {})
{
  return orpo_loss(
    policy.score(pair.prompt, pair.chosen), policy.score(pair.prompt, pair.rejected), params);
}

/// Autoregressive categorical policy over token ids. The distribution at target position i is a
/// softmax over one row of a logit table; the row is picked by hashing the last
/// `context_length` tokens of the prefix together with i. Distinct contexts may share a row.
class ToyPolicy
{
public:
  ToyPolicy(
    std::size_t vocab_size, std::size_t context_length, std::size_t table_rows, std::uint64_t seed,
    double logit_scale = 1.0)
  : vocab_size_(vocab_size), context_length_(context_length), rows_(table_rows),
    logits_(vocab_size * table_rows)
  {
    if (vocab_size < 2 || table_rows < 1) {
      throw InvalidInput("toy policy needs at least two tokens and one table row");
    }
    SplitMix64 rng(seed);
    for (double & v : logits_) {
      v = logit_scale * rng.normal();
    }
  }

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t context_length() const noexcept { return context_length_; }
  std::size_t table_rows() const noexcept { return rows_; }
  std::span<double> parameters() noexcept { return logits_; }
  std::span<const double> parameters() const noexcept { return logits_; }

  SequenceLogProb score_ids(std::span<const int> prompt, std::span<const int> target) const
  {
    SequenceLogProb out;
    out.token_logprobs.reserve(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      const auto row = row_logits(row_for(prompt, target, i));
      out.token_logprobs.push_back(row[checked(target[i])] - log_sum_exp(row));
    }
    return out;
  }

  /// Adds d_logprob[i] * d(logprob_i)/d(logits) into `grad` (same layout as parameters()).
  void accumulate_gradient(
    std::span<const int> prompt, std::span<const int> target, std::span<const double> d_logprob,
    std::span<double> grad) const
  {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const std::size_t r = row_for(prompt, target, i);
      const auto row = row_logits(r);
      const double lse = log_sum_exp(row);
      for (std::size_t k = 0; k < vocab_size_; ++k) {
        const double softmax = std::exp(row[k] - lse);
        const double indicator = static_cast<int>(k) == target[i] ? 1.0 : 0.0;
        grad[r * vocab_size_ + k] += d_logprob[i] * (indicator - softmax);
      }
    }
  }

private:
  std::size_t checked(int token) const
  {
    if (token < 0 || static_cast<std::size_t>(token) >= vocab_size_) {
      throw InvalidInput("token id outside the toy vocabulary");
    }
    return static_cast<std::size_t>(token);
  }

  std::span<const double> row_logits(std::size_t r) const
  {
    return std::span<const double>(logits_).subspan(r * vocab_size_, vocab_size_);
  }

  static double log_sum_exp(std::span<const double> row)
  {
    const double m = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (const double v : row) {
      acc += std::exp(v - m);
    }
    return m + std::log(acc);
  }

  // FNV-1a over (position, context window).
  std::size_t row_for(std::span<const int> prompt, std::span<const int> target, std::size_t i) const
  {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xFFU;
        h *= 1099511628211ULL;
      }
    };
    mix(i);
    const std::size_t prefix_len = prompt.size() + i;
    const std::size_t window = std::min(context_length_, prefix_len);
    for (std::size_t j = prefix_len - window; j < prefix_len; ++j) {
      const int tok = j < prompt.size() ? prompt[j] : target[j - prompt.size()];
      mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(tok)));
    }
    return static_cast<std::size_t>(h % rows_);
  }

  std::size_t vocab_size_;
  std::size_t context_length_;
  std::size_t rows_;
  std::vector<double> logits_;
};

/// Analytic gradient of the ORPO loss with respect to every toy-policy logit.
inline std::vector<double> orpo_gradient_wrt_logits(
  const ToyPolicy & policy, std::span<const int> prompt, std::span<const int> chosen,
  std::span<const int> rejected, const OrpoParams & params)
{
  const auto slp_c = policy.score_ids(prompt, chosen);
  const auto slp_r = policy.score_ids(prompt, rejected);
  const auto g = orpo_loss_gradient(slp_c, slp_r, params);
  std::vector<double> grad(policy.parameters().size(), 0.0);
  policy.accumulate_gradient(prompt, chosen, g.d_chosen, grad);
  policy.accumulate_gradient(prompt, rejected, g.d_rejected, grad);
  return grad;
}

/// Largest relative disagreement between the analytic logit gradient and central finite
/// differences. Entries where both magnitudes are below 1e-10 contribute their absolute error.
inline double toy_policy_grad_check(
  ToyPolicy policy, std::span<const int> prompt, std::span<const int> chosen,
  std::span<const int> rejected, const OrpoParams & params, double step = 1e-5)
{
  const auto analytic = orpo_gradient_wrt_logits(policy, prompt, chosen, rejected, params);
  auto loss = [&]() {
    return orpo_loss(policy.score_ids(prompt, chosen), policy.score_ids(prompt, rejected), params)
      .total;
  };
  auto theta = policy.parameters();
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + step;
    const double up = loss();
    theta[k] = saved - step;
    const double down = loss();
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double diff = std::abs(numeric - analytic[k]);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[k]));
    worst = std::max(worst, scale < 1e-10 ? diff : diff / scale);
  }
  return worst;
}

/// Maps token strings to dense ids.
class Vocabulary
{
public:
  Vocabulary() = default;

  int add(const std::string & token)
  {
    const auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(ids_.size()));
    return it->second;
  }

  int id(const std::string & token) const
  {
    const auto it = ids_.find(token);
    if (it == ids_.end()) {
      throw InvalidInput("token not in vocabulary: \"" + token + "\"");
    }
    return it->second;
  }

  std::vector<int> encode(std::string_view text) const
  {
    std::vector<int> out;
    for (const auto & tok : split_tokens(text)) {
      out.push_back(id(tok));
    }
    return out;
  }

  std::size_t size() const noexcept { return ids_.size(); }

private:
  std::map<std::string, int> ids_;
};

/// Toy policy behind the text-level adapter contract.
class ToyPolicyAdapter : public PolicyAdapter
{
public:
  ToyPolicyAdapter(Vocabulary vocab, ToyPolicy policy)
  : vocab_(std::move(vocab)), policy_(std::move(policy))
  {
    if (policy_.vocab_size() < vocab_.size()) {
      throw InvalidInput("toy policy vocabulary is smaller than the token vocabulary");
    }
  }

  /// Vocabulary covering every token of the given texts, ids assigned in first-seen order.
  static Vocabulary vocabulary_for(std::span<const std::string> texts)
  {
    Vocabulary v;
    for (const auto & text : texts) {
      for (const auto & tok : split_tokens(text)) {
        v.add(tok);
      }
    }
    return v;
  }

  SequenceLogProb score(std::string_view prompt, std::string_view target) const override
  {
    const auto p = vocab_.encode(prompt);
    const auto t = vocab_.encode(target);
    return policy_.score_ids(p, t);
  }

  const Vocabulary & vocabulary() const noexcept { return vocab_; }
  const ToyPolicy & policy() const noexcept { return policy_; }

private:
  Vocabulary vocab_;
  ToyPolicy policy_;
};

inline double toy_policy_grad_check(
  const ToyPolicyAdapter & adapter, const PreferencePair & pair, const OrpoParams & params,
  double step = 1e-5)
{
  const auto & v = adapter.vocabulary();
  const auto prompt = v.encode(pair.prompt);
  const auto chosen = v.encode(pair.chosen);
  const auto rejected = v.encode(pair.rejected);
  return toy_policy_grad_check(adapter.policy(), prompt, chosen, rejected, params, step);
}

/// Log-probabilities computed elsewhere, keyed by (prompt, target) text.
class RecordedPolicy : public PolicyAdapter
{
public:
  void add(std::string prompt, std::string target, SequenceLogProb slp)
  {
    slp.validate();
    table_[{std::move(prompt), std::move(target)}] = std::move(slp);
  }

  SequenceLogProb score(std::string_view prompt, std::string_view target) const override
  {
    const auto it = table_.find({std::string(prompt), std::string(target)});
    if (it == table_.end()) {
      throw NotFound("no recorded log-probabilities for this (prompt, target)");
    }
    return it->second;
  }

  std::size_t size() const noexcept { return table_.size(); }

private:
  std::map<std::pair<std::string, std::string>, SequenceLogProb> table_;
};

}  // namespace offroad

#endif  // OFFROAD__ORPO_HPP_
