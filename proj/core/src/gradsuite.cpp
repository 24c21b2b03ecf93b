// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "visualgpt/gradsuite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "visualgpt/attention.hpp"
#include "visualgpt/gradcheck.hpp"
#include "visualgpt/ops.hpp"
#include "visualgpt/srau.hpp"
#include "visualgpt/training.hpp"

namespace vgpt {

namespace {

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

void merge(GroupCheck& g, const GradCheckReport& r, const std::string& where) {
  if (r.checked > 0 && (g.checked == 0 || r.max_rel_error > g.max_rel_error)) {
    g.max_rel_error = r.max_rel_error;
    g.worst = where + "[" + std::to_string(r.worst_index) + "]";
  }
  g.checked += r.checked;
  g.skipped += r.skipped;
}

struct Case {
  std::string group;
  ScalarFn f;
  std::vector<Tensor> inputs;
  std::function<bool(std::size_t input, std::size_t index)> skip;
};

bool gate_flips(double x, double h, const GateConfig& cfg) {
  const double tau = cfg.effective_tau();
  auto pattern = [&](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return std::pair<bool, bool>{s > tau, 1.0 - s > tau};
  };
  return pattern(x - h) != pattern(x + h);
}

}  // namespace

std::vector<GroupCheck> primitive_gradient_suite(const GradSuiteOptions& opts) {
  std::vector<GroupCheck> groups;
  auto group = [&](const std::string& name) -> GroupCheck& {
    for (auto& g : groups) {
      if (g.group == name) return g;
    }
    groups.push_back({name});
    return groups.back();
  };

  const AttentionConfig acfg{8, 2};
  for (std::size_t p = 0; p < opts.points; ++p) {
    std::mt19937_64 rng(opts.seed * 1000003 + p);
    Tensor a = uniform({3, 4}, rng, -2, 2);
    Tensor b = uniform({3, 4}, rng, 0.5, 2);
    Tensor m = uniform({4, 3}, rng, -1, 1);
    Tensor bias = uniform({4}, rng, -1, 1);
    Tensor gain = uniform({4}, rng, 0.5, 1.5);
    Tensor table = uniform({5, 4}, rng, -1, 1);
    Tensor w = uniform({3, 4}, rng, -1, 1);
    w.set_requires_grad(false);
    const std::vector<std::uint8_t> mask{0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    const std::vector<int> ids{2, 0, 4};
    const std::vector<int> picks{1, 3, 0};
    const double tau = 0.2;

    Tensor hq = uniform({3, 8}, rng, -3, 3);
    Tensor img0 = uniform({4, 8}, rng, -1, 1);
    Tensor img1 = uniform({4, 8}, rng, -1, 1);
    AttentionWeights aw{uniform({8, 8}, rng, -0.5, 0.5), uniform({8, 8}, rng, -0.5, 0.5),
                        uniform({8, 8}, rng, -0.5, 0.5), uniform({8, 8}, rng, -0.5, 0.5)};
    Tensor proj = uniform({3, 8}, rng, -1, 1);
    proj.set_requires_grad(false);
    Tensor gh = uniform({3, 8}, rng, -4, 4);

    auto weigh = [&](const Tensor& t) { return sum(mul(t, w)); };
    auto weigh8 = [&](const Tensor& t) { return sum(mul(t, proj)); };
    auto no_skip = std::function<bool(std::size_t, std::size_t)>{};
    auto near_tau = [&](const Tensor& x) {
      return [x, tau, h = opts.h](std::size_t, std::size_t i) { return std::abs(x.data()[i] - tau) <= h; };
    };

    std::vector<Case> cases{
        {"matmul", [&] { return sum(mul(matmul(a, m), matmul(a, m))); }, {a, m}, no_skip},
        {"transpose", [&] { return sum(mul(transpose(a), m)); }, {a, m}, no_skip},
        {"add", [&] { return weigh(add(a, b)); }, {a, b}, no_skip},
        {"sub", [&] { return weigh(sub(a, b)); }, {a, b}, no_skip},
        {"mul", [&] { return weigh(mul(a, b)); }, {a, b}, no_skip},
        {"div", [&] { return weigh(div(a, b)); }, {a, b}, no_skip},
        {"add_bias", [&] { return weigh(add_bias(a, bias)); }, {a, bias}, no_skip},
        {"affine", [&] { return sum(mul(affine(a, -1.5, 0.25), a)); }, {a}, no_skip},
        {"sigmoid", [&] { return weigh(sigmoid(a)); }, {a}, no_skip},
        {"gelu", [&] { return weigh(gelu(a)); }, {a}, no_skip},
        {"threshold", [&] { return weigh(mul(threshold(a, tau), a)); }, {a}, near_tau(a)},
        {"softmax", [&] { return add(weigh(softmax(a)), weigh(softmax(a, 0))); }, {a}, no_skip},
        {"log_softmax", [&] { return weigh(log_softmax(a)); }, {a}, no_skip},
        {"layer_norm", [&] { return weigh(layer_norm(a, gain, bias)); }, {a, gain, bias}, no_skip},
        {"mask_fill", [&] { return weigh(softmax(mask_fill(a, mask))); }, {a}, no_skip},
        {"embedding_lookup", [&] { return sum(mul(embedding_lookup(table, ids), b)); }, {table, b}, no_skip},
        {"concat",
         [&] {
           const std::vector<Tensor> rows{a, b};
           const std::vector<Tensor> cols{a, mul(b, b)};
           return add(sum(mul(concat(rows, 0), concat(std::vector<Tensor>{w, w}, 0))),
                      sum(mul(concat(cols, 1), concat(std::vector<Tensor>{w, w}, 1))));
         },
         {a, b},
         no_skip},
        {"slice",
         [&] { return sum(mul(slice_cols(slice_rows(a, 1, 3), 1, 3), slice_cols(slice_rows(b, 0, 2), 0, 2))); },
         {a, b},
         no_skip},
        {"pick", [&] { return sum(mul(pick(a, picks), pick(b, picks))); }, {a, b}, no_skip},
        {"sum_mean",
         [&] {
           const std::vector<Tensor> parts{a, b, mul(a, a)};
           return add(mean(mul(a, b)), weigh(mean_of(parts)));
         },
         {a, b},
         no_skip},
        {"attention",
         [&] {
           return add(weigh8(causal_self_attention(hq, aw, acfg)), weigh8(enc_dec_attention(hq, img0, aw, acfg)));
         },
         {hq, img0, aw.wq, aw.wk, aw.wv, aw.wo},
         no_skip},
    };

    for (GateKind kind : {GateKind::kOcg, GateKind::kSrau, GateKind::kNormalizedSrau}) {
      const GateConfig gc{kind, tau};
      auto flips = [gh, gc, h = opts.h](std::size_t, std::size_t i) { return gate_flips(gh.data()[i], h, gc); };
      cases.push_back({"gates_" + to_string(kind),
                       [&, gc] {
                         const auto g = compute_gates(gh, gc);
                         return add(weigh8(g.b_vis), sum(mul(g.b_lan, g.b_lan)));
                       },
                       {gh},
                       flips});
    }

    GatedCrossAttentionParams gp{aw, NormParams{uniform({8}, rng, 0.5, 1.5), uniform({8}, rng, -0.5, 0.5)},
                                 std::nullopt};
    const GateConfig gc{GateKind::kSrau, tau};
    const std::vector<Tensor> images{img0, img1};
    cases.push_back({"gated_cross_attention",
                     [&] { return weigh8(gated_cross_attention(gh, images, gp, acfg, gc).output); },
                     {gh, img0, img1, aw.wq, aw.wv, gp.query_norm->gain},
                     [gh, gc, h = opts.h](std::size_t input, std::size_t i) {
                       return input == 0 && gate_flips(gh.data()[i], h, gc);
                     }});

    for (auto& c : cases) {
      auto& g = group(c.group);
      ++g.points;
      for (std::size_t k = 0; k < c.inputs.size(); ++k) {
        std::function<bool(std::size_t)> skip;
        if (c.skip) skip = [&c, k](std::size_t i) { return c.skip(k, i); };
        const auto r = finite_diff_check(c.f, c.inputs[k], opts.h, 1e-4, {}, skip);
        merge(g, r, "point " + std::to_string(p) + " input " + std::to_string(k));
      }
    }
  }
  return groups;
}

GroupCheck xe_gradient_check(const ModelConfig& base, const GradSuiteOptions& opts, std::size_t coords_per_tensor,
                             double weight_noise) {
  ModelConfig cfg = base;
  if (cfg.vocab_size == 0) cfg.vocab_size = 100;
  std::mt19937_64 rng(opts.seed);
  Model model = make_model(cfg, ModelMode::kCaptioner, opts.seed);
  if (weight_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, weight_noise);
    for (const auto& [name, _] : model.params.tensors()) {
      for (auto& v : model.params.at(name).mutable_data()) v += noise(rng);
    }
  }
  model.params.set_requires_grad(true);

  std::vector<std::string> names;
  for (const auto& [name, _] : model.params.tensors()) names.push_back(name);

  GroupCheck g{"xe_loss"};
  const std::size_t points = std::max<std::size_t>(opts.points, 1);
  for (std::size_t p = 0; p < points; ++p) {
    std::uniform_int_distribution<std::size_t> n_obj(1, 4), len(1, std::min<std::size_t>(10, cfg.max_seq_len - 1));
    std::uniform_int_distribution<TokenId> tok(BpeModel::kPad + 1, static_cast<TokenId>(cfg.vocab_size - 1));
    const Tensor features = [&] {
      Tensor t = uniform({n_obj(rng), cfg.feature_dim}, rng, 0, 1);
      t.set_requires_grad(false);
      return t;
    }();
    std::vector<TokenId> target(len(rng));
    for (auto& t : target) t = tok(rng);
    target.back() = BpeModel::kEos;

    auto loss = [&](std::vector<LayerGates>* sink) {
      const auto enc = encoder_forward(features, model);
      DecoderOptions o;
      o.gate_sink = sink;
      return xe_loss(model, &enc, target, o);
    };
    auto gate_pattern = [&] {
      std::vector<LayerGates> gates;
      NoGradScope ng;
      loss(&gates);
      std::vector<bool> zero;
      for (const auto& lg : gates) {
        for (double v : lg.b_vis.data()) zero.push_back(v == 0.0);
        for (double v : lg.b_lan.data()) zero.push_back(v == 0.0);
      }
      return zero;
    };

    ++g.points;
    for (std::size_t n = p; n < names.size(); n += points) {
      Tensor x = model.params.at(names[n]);
      std::uniform_int_distribution<std::size_t> pick_index(0, x.size() - 1);
      std::vector<std::size_t> idx;
      for (std::size_t c = 0; c < coords_per_tensor; ++c) idx.push_back(pick_index(rng));
      auto crosses = [&](std::size_t i) {
        auto values = x.mutable_data();
        const double orig = values[i];
        values[i] = orig + opts.xe_h;
        const auto up = gate_pattern();
        values[i] = orig - opts.xe_h;
        const auto down = gate_pattern();
        values[i] = orig;
        return up != down;
      };
      const auto r = finite_diff_check([&] { return loss(nullptr); }, x, opts.xe_h, 1e-4, idx, crosses);
      merge(g, r, names[n]);
    }
  }
  return g;
}

}  // namespace vgpt
