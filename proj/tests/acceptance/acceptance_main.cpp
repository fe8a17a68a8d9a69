// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
//
//   acceptance [--cli PATH_TO_OFFROAD]
//
// With --cli, the determinism criterion also runs the command-line tool end to end.

#include "offroad/offroad.hpp"
#include "oracles/brute_edt.hpp"
#include "oracles/elevation.hpp"
#include "oracles/knn.hpp"
#include "oracles/miner.hpp"
#include "oracles/quantize.hpp"
#include "support/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace offroad;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool pass{true};
  std::string detail{};
};

// Collects the first few failure messages and a running verdict.
class Check
{
public:
  void expect(bool ok, const std::string & what)
  {
    if (ok) {
      return;
    }
    pass_ = false;
    if (++failures_ <= 5) {
      messages_ += (messages_.empty() ? "" : "; ") + what;
    }
  }

  Outcome done(const std::string & summary) const
  {
    if (pass_) {
      return {true, summary};
    }
    return {false, summary + " | " + std::to_string(failures_) + " failure(s): " + messages_};
  }

private:
  bool pass_{true};
  std::size_t failures_{0};
  std::string messages_{};
};

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 1 -------------------------------------------------------------------------------------------

Outcome distance_transform()
{
  Check check;
  SplitMix64 rng(101);
  double seconds = 0.0;
  std::size_t cells = 0;
  for (int i = 0; i < 200; ++i) {
    const int w = 1 + static_cast<int>(rng.below(64));
    const int h = 1 + static_cast<int>(rng.below(64));
    double density = rng.uniform(0.0, 0.6);
    if (i % 20 == 0) density = 0.0;
    if (i % 20 == 1) density = 1.0;
    if (i % 20 == 2) density = 0.002;
    const auto grid = fixtures::random_grid(rng, w, h, density, rng.uniform(0.05, 2.0));
    const auto start = std::chrono::steady_clock::now();
    const auto field = clearance_field(grid);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto sq = oracle::brute_squared_edt(grid);
    const auto meters = oracle::brute_edt_meters(grid);
    check.expect(field.squared_cells == sq, "squared distances differ on grid " + std::to_string(i));
    check.expect(field.distance == meters, "metric distances differ on grid " + std::to_string(i));
    cells += sq.size();
  }
  check.expect(seconds < 10.0, "runtime " + fmt(seconds) + " s");
  return check.done("200 grids, " + std::to_string(cells) + " cells, exact; transform time " +
                    fmt(seconds) + " s");
}

// 2 -------------------------------------------------------------------------------------------

Outcome traversability_properties()
{
  Check check;
  const TraversabilityParams params;
  check.expect(params.alpha == 3.0 && params.top_k == 20, "defaults are not alpha=3, K=20");
  SplitMix64 rng(202);
  std::size_t reductions = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = 8 + static_cast<int>(rng.below(40));
    const int h = 8 + static_cast<int>(rng.below(40));
    const double res = rng.uniform(0.1, 1.0);
    const auto grid = fixtures::random_grid(rng, w, h, rng.uniform(0.0, 0.15), res);
    const auto field = clearance_field(grid);
    Trajectory traj;
    const std::size_t n = 2 + rng.below(40);
    for (std::size_t k = 0; k < n; ++k) {
      traj.waypoints.push_back(
        {rng.uniform(-2.0, w * res + 2.0), rng.uniform(-2.0, h * res + 2.0), 0.0, std::nullopt});
    }
    auto profile = clearance_profile(traj, field);
    const auto base = traversability_score(profile, params);
    check.expect(base.s_trav >= 0.0 && base.s_trav <= 1.0, "S_trav out of range: " + fmt(base.s_trav));
    // Lower one clearance in several ways: scaled, to zero, by one ulp, or from unbounded.
    const std::size_t k = rng.below(n);
    const double c = profile.clearances[k];
    double lowered = 0.0;
    switch (i % 4) {
      case 0:
        lowered = std::isinf(c) ? rng.uniform(0.0, 5.0) : c * rng.uniform(0.0, 1.0);
        break;
      case 1:
        lowered = 0.0;
        break;
      case 2:
        lowered = std::isinf(c) ? 1e300 : std::nextafter(c, 0.0);
        break;
      default:
        lowered = std::isinf(c) ? 0.25 : std::max(0.0, c - rng.uniform(0.0, 1.0));
        break;
    }
    if (!(lowered <= c)) {
      continue;
    }
    profile.clearances[k] = lowered;
    const auto after = traversability_score(profile, params);
    ++reductions;
    check.expect(
      after.s_trav <= base.s_trav,
      "S_trav rose from " + fmt(base.s_trav) + " to " + fmt(after.s_trav) + " on pair " +
        std::to_string(i));
  }
  return check.done("1000 pairs in [0,1], " + std::to_string(reductions) +
                    " single-clearance reductions never raised S_trav; alpha=3, K=20");
}

// 3 -------------------------------------------------------------------------------------------

Outcome elevation_cases()
{
  Check check;
  const ElevationParams params;
  check.expect(params.w1 == 5.0 && params.w2 == 1.0 && params.w3 == 10.0,
               "default weights are not (5,1,10)");
  SplitMix64 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto gt = fixtures::random_walk(rng, 2 + rng.below(30));
    worst = std::max(worst, std::abs(elevation_consistency(gt, gt, params).s_z));
    auto shifted = gt;
    const double dz = rng.uniform(-50.0, 50.0);
    for (auto & w : shifted.waypoints) w.z += dz;
    worst = std::max(worst, std::abs(elevation_consistency(shifted, gt, params).s_z));
  }
  check.expect(worst <= 1e-9, "identity/offset S_z reached " + fmt(worst));

  // Flat ground truth against a 0 -> 1 m ramp over 10 m at M = 100. The frozen number comes
  // from the extended-precision oracle below.
  constexpr double frozen_ramp_s_z = 0.81666064021268133;
  const std::size_t m = 100;
  std::vector<long double> zp(m), zg(m, 0.0L);
  for (std::size_t k = 0; k < m; ++k) zp[k] = static_cast<long double>(k) / (m - 1);
  const auto o = oracle::elevation_terms(zp, zg, 10.0L / (m - 1), true);
  check.expect(std::abs(static_cast<double>(o.s_z) - frozen_ramp_s_z) <= 1e-12,
               "oracle drifted from its frozen value");
  const auto ramp = elevation_consistency(fixtures::traj({{0, 0, 0}, {10, 0, 1}}),
                                          fixtures::traj({{0, 0, 0}, {10, 0, 0}}), params);
  const double err = std::abs(ramp.s_z - frozen_ramp_s_z);
  check.expect(err <= 1e-9, "ramp S_z " + fmt(ramp.s_z) + " vs oracle " + fmt(frozen_ramp_s_z));
  return check.done("identity/offset max |S_z| " + fmt(worst) + ", ramp S_z " + fmt(ramp.s_z) +
                    " (|err| " + fmt(err) + "), weights (5,1,10)");
}

// 4 -------------------------------------------------------------------------------------------

Trajectory z_shifted(Trajectory t, double dz)
{
  for (auto & w : t.waypoints) w.z += dz;
  return t;
}

Outcome hard_negative_oracle()
{
  Check check;
  SyntheticSpec spec;
  spec.scenes = 20;
  spec.frames_per_scene = 100;
  const auto archive = generate_synthetic(404, spec);
  MiningParams params;
  std::size_t targets = 0, ties = 0;
  for (const auto & scene : archive.scenes) {
    auto pool = archive.scene_frames(scene.scene_id);
    // Copy the best candidate of some targets onto another frame so the maximum is shared
    // and the frame-id tie-break decides.
    for (std::size_t t = 0; t < 10; ++t) {
      const auto best = oracle::mine(pool[t], pool, params.lambda_geo, params.samples);
      if (!best) continue;
      const std::size_t copy_to = (t * 37 + 11) % pool.size();
      if (pool[copy_to].frame_id == pool[t].frame_id || pool[copy_to].frame_id == best->frame_id) {
        continue;
      }
      for (const auto & r : pool) {
        if (r.frame_id == best->frame_id) {
          pool[copy_to].gt_trajectory = r.gt_trajectory;
        }
      }
    }
    for (const auto & target : pool) {
      const auto want = oracle::mine(target, pool, params.lambda_geo, params.samples);
      const auto got = mine_hard_negative(target, pool, params);
      ++targets;
      check.expect(got.has_value() == want.has_value(), "presence differs for " + target.frame_id);
      if (!got || !want) continue;
      check.expect(got->frame_id == want->frame_id,
                   target.frame_id + ": got " + got->frame_id + ", oracle " + want->frame_id);
      check.expect(std::abs(got->score - want->score) <= 1e-12,
                   target.frame_id + ": score " + fmt(got->score) + " vs " + fmt(want->score));
      // count decisions that needed the tie-break
      const auto g = *oracle::resample(target.gt_trajectory, params.samples);
      std::size_t at_max = 0;
      for (const auto & c : pool) {
        if (c.frame_id == target.frame_id) continue;
        const double s = oracle::score(*oracle::resample(c.gt_trajectory, params.samples), g,
                                       params.lambda_geo);
        at_max += s == want->score ? 1 : 0;
      }
      ties += at_max > 1 ? 1 : 0;
    }
  }
  check.expect(ties > 0, "fixture produced no ties");

  // Same XY with contradictory z must beat a far-XY candidate with matching z.
  const auto gt = fixtures::arc(12.0, 15.0, 10, 1.0, 0.3, 1.0, -2.0, 0.0);
  Trajectory far_xy = gt;
  for (auto & w : far_xy.waypoints) w.y += 3.0;
  const SceneRecord target{"s", "target", "img/target.jpg", "Go.", gt};
  const std::vector<SceneRecord> pool{
    target, {"s", "a_far_xy_same_z", "img/a.jpg", "Go.", far_xy},
    {"s", "b_same_xy_wrong_z", "img/b.jpg", "Go.", z_shifted(gt, 0.6)}};
  for (const double lambda : {0.5, 1.0, 2.0}) {
    MiningParams p;
    p.lambda_geo = lambda;
    const auto got = mine_hard_negative(target, pool, p);
    check.expect(got && got->frame_id == "b_same_xy_wrong_z",
                 "lambda " + fmt(lambda) + " picked the far-XY candidate");
  }
  return check.done(std::to_string(targets) + " targets match the exhaustive scorer, " +
                    std::to_string(ties) +
                    " decided by tie-break; same-XY/wrong-z wins for lambda 0.5, 1, 2");
}

// 5 -------------------------------------------------------------------------------------------

// Loss recomputed from token log-probabilities in extended precision.
long double reference_loss(
  const SequenceLogProb & c, const SequenceLogProb & r, const OrpoParams & params)
{
  auto seq = [&](const SequenceLogProb & s) {
    long double acc = 0.0L;
    for (const double v : s.token_logprobs) acc += v;
    return params.length_normalize ? acc / s.token_logprobs.size() : acc;
  };
  auto log_odds = [](long double lp) { return lp - std::log(-std::expm1(lp)); };
  const long double lc = seq(c), lr = seq(r);
  const long double gap = log_odds(lc) - log_odds(lr);
  return -lc + params.lambda_orpo * std::log1p(std::exp(-gap));
}

std::vector<int> random_ids(SplitMix64 & rng, std::size_t n, std::size_t vocab)
{
  std::vector<int> out(n);
  for (auto & v : out) v = static_cast<int>(rng.below(vocab));
  return out;
}

Outcome orpo_gradients()
{
  Check check;
  SplitMix64 rng(505);
  double worst = 0.0;
  std::size_t redrawn = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t vocab = 4 + rng.below(12);
    ToyPolicy policy(vocab, 1 + rng.below(3), 4 + rng.below(28), rng.next(), rng.uniform(0.3, 1.5));
    const auto prompt = random_ids(rng, 1 + rng.below(6), vocab);
    const auto chosen = random_ids(rng, 2 + rng.below(12), vocab);
    const auto rejected = random_ids(rng, 2 + rng.below(12), vocab);
    const OrpoParams params{rng.uniform(0.05, 1.0), rng.uniform() < 0.7};
    // The probability clamp makes the loss flat below 1e-12 and kinked at the boundary, so
    // instances are drawn where both sequences stay clear of it.
    const double floor = std::log(probability_clamp) + 1.0;
    if (sequence_logprob(policy.score_ids(prompt, chosen), params.length_normalize) < floor ||
        sequence_logprob(policy.score_ids(prompt, rejected), params.length_normalize) < floor) {
      ++redrawn;
      --i;
      continue;
    }
    const auto analytic = orpo_gradient_wrt_logits(policy, prompt, chosen, rejected, params);
    auto theta = policy.parameters();
    auto loss = [&]() {
      return reference_loss(
        policy.score_ids(prompt, chosen), policy.score_ids(prompt, rejected), params);
    };
    // Fourth-order central difference.
    const double h = 1e-3;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      auto at = [&](double d) {
        theta[k] = saved + d;
        return loss();
      };
      const long double numeric =
        (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0L * h);
      theta[k] = saved;
      const double n = static_cast<double>(numeric);
      const double scale = std::max({std::abs(n), std::abs(analytic[k]), 1e-6});
      worst = std::max(worst, std::abs(n - analytic[k]) / scale);
    }
  }
  check.expect(worst < 1e-5, "max relative error " + fmt(worst));

  // lambda = 0 leaves only the NLL term.
  bool nll_exact = true;
  for (int i = 0; i < 100; ++i) {
    SequenceLogProb c, r;
    for (std::size_t k = 0, n = 1 + rng.below(20); k < n; ++k) c.token_logprobs.push_back(rng.uniform(-4, -1e-3));
    for (std::size_t k = 0, n = 1 + rng.below(20); k < n; ++k) r.token_logprobs.push_back(rng.uniform(-4, -1e-3));
    const OrpoParams p{0.0, rng.uniform() < 0.5};
    const auto b = orpo_loss(c, r, p);
    nll_exact = nll_exact && b.total == -sequence_logprob(c, p.length_normalize) && b.total == b.sft;
  }
  check.expect(nll_exact, "lambda 0 differs from the NLL term");

  double odds_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    SequenceLogProb a;
    for (std::size_t k = 0, n = 1 + rng.below(30); k < n; ++k) a.token_logprobs.push_back(rng.uniform(-6, -1e-4));
    odds_err = std::max(odds_err, std::abs(odds_loss(a, a, {0.1, rng.uniform() < 0.5}) - std::log(2.0)));
  }
  check.expect(odds_err <= 1e-12, "odds_loss(a,a) off log 2 by " + fmt(odds_err));
  return check.done("50 toy instances (" + std::to_string(redrawn) +
                    " redrawn inside the probability clamp), max relative gradient error " + fmt(worst) +
                    "; lambda 0 equals NLL exactly; |odds_loss(a,a) - log 2| <= " + fmt(odds_err));
}

// 6 -------------------------------------------------------------------------------------------

double random_coordinate(SplitMix64 & rng)
{
  switch (rng.below(6)) {
    case 0:
      return rng.uniform(-100.0, 100.0);
    case 1:  // binary ties at the third decimal
      return (static_cast<double>(rng.below(8001)) - 4000.0) / 8.0;
    case 2:  // decimal near-ties
      return (static_cast<double>(rng.below(20001)) - 10000.0) * 0.005;
    case 3:
      return rng.uniform(-0.006, 0.006);
    case 4:
      return rng.uniform(-1e6, 1e6);
    default:
      return std::round(rng.uniform(-50.0, 50.0) * 100.0) / 100.0;
  }
}

Outcome tokenizer_round_trip()
{
  Check check;
  SplitMix64 rng(606);
  std::size_t coords = 0;
  for (int i = 0; i < 10000; ++i) {
    Trajectory t;
    for (std::size_t k = 0, n = rng.below(25); k < n; ++k) {
      t.waypoints.push_back(
        {random_coordinate(rng), random_coordinate(rng), random_coordinate(rng), std::nullopt});
    }
    const auto text = tokenize_trajectory(t);
    std::string expected_text(trajectory_token);
    for (std::size_t k = 0; k < t.size(); ++k) {
      expected_text += (k ? ",[" : "[") + oracle::fixed2(t[k].x) + "," + oracle::fixed2(t[k].y) +
                       "," + oracle::fixed2(t[k].z) + "]";
    }
    check.expect(text == expected_text, "text differs: " + text.substr(0, 60));
    const auto parsed = parse_trajectory(text);
    const auto want = oracle::quantize(t);
    check.expect(parsed.ok() && parsed.trajectory->size() == want.size(), "parse failed: " + text.substr(0, 60));
    if (!parsed.ok()) continue;
    for (std::size_t k = 0; k < want.size(); ++k) {
      const auto & a = (*parsed.trajectory)[k];
      const auto & b = want[k];
      check.expect(a.x == b.x && a.y == b.y && a.z == b.z, "value differs in " + text.substr(0, 60));
      coords += 3;
    }
  }

  struct Bad
  {
    const char * text;
    std::size_t offset;
  };
  const Bad bad[] = {
    {"<trajectory>[1.00,2.00]", 22},
    {"<trajectory>[1.00,2.00,3.00] and more", 28},
    {"<trajectory>[1.00,2.00,3.00],", 29},
    {"<trajectory>[1.0,2.00,3.00]", 16},
    {"<trajectory>[1.000,2.00,3.00]", 17},
    {"<trajectory>[1,2.00,3.00]", 14},
    {"<trajectory>[+1.00,2.00,3.00]", 13},
    {"<trajectory>[.50,2.00,3.00]", 13},
    {"<trajectory> [1.00,2.00,3.00]", 12},
    {"<trajectory>[1.00, 2.00,3.00]", 18},
    {"<trajectory>[1.00,2.00,3.00", 27},
    {"<trajectory>[1.00,2.00,3.00][4.00,5.00,6.00]", 28},
    {"<trajectory>[nan,2.00,3.00]", 13},
    {"<trajectory>[1e5,2.00,3.00]", 14},
    {"<trajectory>[-,2.00,3.00]", 14},
    {"trajectory>[1.00,2.00,3.00]", 0},
    {"", 0},
  };
  for (const auto & b : bad) {
    const auto r = parse_trajectory(b.text);
    check.expect(!r.ok() && r.error && r.error->offset == b.offset,
                 std::string("\"") + b.text + "\" not rejected at " + std::to_string(b.offset));
  }
  const auto completion = parse_completion("Turn left.<trajectory>[1.00,2.00]");
  check.expect(!completion.trajectory.ok() && completion.trajectory.error->offset == 32,
               "completion error offset not relative to the full text");
  return check.done("10000 trajectories (" + std::to_string(coords) +
                    " coordinates) equal the quantization oracle; " +
                    std::to_string(std::size(bad) + 1) + " grammar violations rejected at the expected offsets");
}

// 7 -------------------------------------------------------------------------------------------

Outcome protocol_fidelity()
{
  Check check;
  const auto root = fixtures::temp_dir("acceptance_protocol");
  std::size_t frames = 0;
  for (const auto terrain :
       {Terrain::obstacle_field, Terrain::flat, Terrain::ramp, Terrain::sine_hill}) {
    SyntheticSpec spec;
    spec.terrain = terrain;
    const auto dir = root / std::string(to_string(terrain));
    save_archive(generate_synthetic(0, spec), dir);
    const auto archive = load_archive(dir);
    const auto preds = predictions_from_text(predictions_to_text(self_predictions(archive)), "self");
    const auto report = evaluate_batch(archive, preds, ParamsBundle{});
    const auto & a = report.aggregates;
    const std::string name(to_string(terrain));
    check.expect(a.failure_rate == 0.0, name + ": failure rate " + fmt(a.failure_rate.value_or(-1)));
    for (const auto & l2 : a.l2_mean) {
      check.expect(l2.has_value() && *l2 == 0.0, name + ": L2 not zero");
    }
    for (const auto & row : report.frames) {
      for (const auto & l2 : row.l2) {
        check.expect(l2.has_value() && *l2 == 0.0, name + ": frame L2 not zero");
      }
    }
    check.expect(a.s_z_mean.has_value() && *a.s_z_mean == 0.0, name + ": S_z not zero");
    check.expect(a.elevation_count == a.frames, name + ": missing elevation rows");
    frames += a.frames;
  }

  const SyntheticSpec spec;
  double corridor_min = 1.0, through_max = 0.0;
  for (std::size_t s = 0; s < spec.scenes; ++s) {
    const auto layout = draw_scene_layout(0, s, spec);
    const auto field = clearance_field(render_grid(layout));
    for (std::size_t f = 0; f < spec.frames_per_scene; ++f) {
      const auto frame = draw_frame_layout(0, s, f, layout);
      corridor_min = std::min(
        corridor_min, traversability_score(corridor_trajectory(layout, frame, spec), field).s_trav);
    }
    through_max =
      std::max(through_max, traversability_score(through_obstacle_trajectory(layout), field).s_trav);
  }
  check.expect(corridor_min > 0.9, "corridor S_trav " + fmt(corridor_min));
  check.expect(through_max < 0.2, "through-obstacle S_trav " + fmt(through_max));
  return check.done(std::to_string(frames) +
                    " self-evaluated frames over four terrains: failure 0%, L2 0, S_z 0; corridor "
                    "S_trav min " + fmt(corridor_min) + ", through-obstacle max " + fmt(through_max));
}

// 8 -------------------------------------------------------------------------------------------

std::vector<Prediction> noisy_predictions(const SceneArchive & archive)
{
  SplitMix64 rng(808);
  std::vector<Prediction> out;
  for (const auto & r : archive.frames) {
    auto t = r.gt_trajectory;
    for (auto & w : t.waypoints) {
      w.x += rng.uniform(-1, 1);
      w.y += rng.uniform(-1, 1);
      w.z += rng.uniform(-0.3, 0.3);
    }
    std::string text = r.language + tokenize_trajectory(t);
    if (rng.below(8) == 0) text.pop_back();
    out.push_back({r.frame_id, text, std::nullopt});
  }
  return out;
}

int run(const std::string & command)
{
  return std::system(command.c_str());
}

Outcome determinism(const std::string & cli)
{
  Check check;
  const ParamsBundle params;
  const auto archive = generate_synthetic(0, SyntheticSpec{});
  const auto preds = noisy_predictions(archive);
  const auto eval_ref = report_to_json_text(evaluate_batch(archive, preds, params, 1));
  const auto mined_ref = mine_dataset(archive, params, 1);
  const auto pairs_ref = pairs_to_text(mined_ref.pairs, params.mining);
  const auto mining_ref = mining_report_to_text(mined_ref.report, params);
  for (int repeat = 0; repeat < 2; ++repeat) {
    for (const std::size_t w : {1u, 4u, 8u}) {
      check.expect(report_to_json_text(evaluate_batch(archive, preds, params, w)) == eval_ref,
                   "eval differs at workers " + std::to_string(w));
      const auto mined = mine_dataset(archive, params, w);
      check.expect(pairs_to_text(mined.pairs, params.mining) == pairs_ref,
                   "pairs differ at workers " + std::to_string(w));
      check.expect(mining_report_to_text(mined.report, params) == mining_ref,
                   "mining report differs at workers " + std::to_string(w));
    }
  }
  std::string summary = "in-process eval and mine identical over 2 runs x workers {1,4,8}";

  if (!cli.empty()) {
    const auto dir = fixtures::temp_dir("acceptance_cli");
    const auto q = [](const fs::path & p) { return "\"" + p.string() + "\""; };
    const auto archive_dir = dir / "archive";
    check.expect(run(q(cli) + " gen-synthetic --seed 0 --out " + q(archive_dir) +
                     " --self-predictions " + q(dir / "self.jsonl") + " > /dev/null") == 0,
                 "gen-synthetic failed");
    {
      std::ofstream out(dir / "noisy.jsonl", std::ios::binary);
      out << predictions_to_text(noisy_predictions(load_archive(archive_dir)));
    }
    std::map<std::string, std::string> first;
    for (int repeat = 0; repeat < 2; ++repeat) {
      for (const int w : {1, 4, 8}) {
        const auto tag = std::to_string(repeat) + "_" + std::to_string(w);
        const auto ws = " --workers " + std::to_string(w);
        check.expect(run(q(cli) + " eval --archive " + q(archive_dir) + " --predictions " +
                         q(dir / "noisy.jsonl") + ws + " --out " + q(dir / ("eval_" + tag))) == 0,
                     "cli eval failed");
        check.expect(run(q(cli) + " mine --archive " + q(archive_dir) + ws + " --out " +
                         q(dir / ("pairs_" + tag)) + " --report " + q(dir / ("mine_" + tag))) == 0,
                     "cli mine failed");
        for (const std::string kind : {"eval_", "pairs_", "mine_"}) {
          const auto bytes = slurp(dir / (kind + tag));
          check.expect(!bytes.empty(), "cli wrote nothing for " + kind + tag);
          const auto [it, inserted] = first.emplace(kind, bytes);
          check.expect(inserted || it->second == bytes, "cli " + kind + " differs at " + tag);
        }
      }
    }
    summary += "; CLI eval/mine byte-identical over 2 runs x workers {1,4,8}";
  }
  return check.done(summary);
}

// 9 -------------------------------------------------------------------------------------------

Outcome retrieval()
{
  Check check;
  SplitMix64 rng(909);
  // Congruent arcs: one radius and length, ten turning each way, each under its own rigid
  // placement and height offset.
  std::vector<SceneRecord> arcs;
  std::map<std::string, double> side;
  for (int i = 0; i < 20; ++i) {
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    char id[16];
    std::snprintf(id, sizeof(id), "arc%02d", i);
    arcs.push_back({"pool", id, "img/" + std::string(id) + ".jpg", "",
                    fixtures::arc(15.0, 20.0, 12, sign, rng.uniform(-3.14, 3.14),
                                  rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-5, 5))});
    side[id] = sign;
  }
  const auto arc_index = build_index(arcs);
  std::size_t pure = 0;
  for (const auto & a : arcs) {
    const auto hits = retrieve_similar(arc_index, a.frame_id, 5);
    bool same = hits.size() == 5;
    for (const auto & h : hits) same = same && side[h.frame_id] == side[a.frame_id];
    pure += same ? 1 : 0;
  }
  check.expect(pure == arcs.size(), "purity " + std::to_string(pure) + "/20");

  std::vector<SceneRecord> pool;
  for (int i = 0; i < 500; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "e%03d", i);
    pool.push_back({"s" + std::to_string(i % 7), id, "", "", fixtures::random_walk(rng, 3 + rng.below(20))});
  }
  const auto index = build_index(pool);
  check.expect(index.entries.size() == 500, "index dropped entries");
  std::vector<std::vector<double>> raw;
  for (const auto & e : index.entries) raw.push_back(e.raw);
  const auto z = oracle::zscore(raw);
  double z_err = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t d = 0; d < raw[i].size(); ++d) {
      z_err = std::max(z_err, std::abs(index.entries[i].normalized[d] - static_cast<double>(z[i][d])));
    }
  }
  check.expect(z_err < 1e-9, "normalization differs from oracle by " + fmt(z_err));
  std::size_t queries = 0;
  for (const auto & e : index.entries) {
    const std::size_t k = 1 + rng.below(12);
    const auto got = retrieve_similar(index, e.frame_id, k);
    const auto want = oracle::knn(index, e.frame_id, k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].frame_id == want[i].frame_id && got[i].distance == want[i].distance;
    }
    check.expect(same, "kNN differs for " + e.frame_id);
    ++queries;
  }
  return check.done("turn-direction purity " + std::to_string(pure) + "/20 at top-5; " +
                    std::to_string(queries) + " queries on 500 entries match brute force exactly");
}

}  // namespace

int main(int argc, char ** argv)
{
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
    {"distance transform vs brute force", distance_transform},
    {"traversability bounds and monotonicity", traversability_properties},
    {"elevation zero/offset cases and ramp oracle", elevation_cases},
    {"hard-negative miner vs exhaustive oracle", hard_negative_oracle},
    {"ORPO gradient check", orpo_gradients},
    {"tokenizer round trip and grammar", tokenizer_round_trip},
    {"protocol fidelity end to end", protocol_fidelity},
    {"determinism across runs and workers", [&] { return determinism(cli); }},
    {"retrieval sanity", retrieval},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " - "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
