#include "survt/gradcheck.hpp"

#include <cmath>

#include "survt/loss.hpp"
#include "survt/rng.hpp"

namespace survt {

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

}  // namespace

std::vector<GradCheckItem> primitive_gradient_checks(std::uint64_t seed, double step) {
  Rng rng(seed);
  std::vector<GradCheckItem> items;
  auto check = [&](const std::string& name, const Tensor& x,
                   const std::function<Tape::NodeId(Tape&, Tape::NodeId)>& f) {
    items.push_back({name, gradient_check(f, x, step)});
  };

  const Tensor w = random_tensor({4, 3}, rng);
  check("matmul", random_tensor({5, 4}, rng), [&](Tape& t, Tape::NodeId x) {
    return t.sum(t.matmul(x, t.constant(w)));
  });

  const Tensor c53 = random_tensor({5, 3}, rng);
  check("add_mul_sub", random_tensor({5, 3}, rng), [&](Tape& t, Tape::NodeId x) {
    const Tape::NodeId cx = t.constant(c53);
    return t.sum(t.sub(t.mul(x, x), t.add(x, cx)));
  });

  const Tensor bias = random_tensor({3}, rng);
  check("add_rows_scale", random_tensor({4, 3}, rng), [&](Tape& t, Tape::NodeId x) {
    return t.sum(t.scale(t.add_rows(x, t.constant(bias)), 1.7));
  });

  {
    Mask keep = {1, 0, 1, 1, 0};
    const Tensor probe = random_tensor({3, 5}, rng);
    check("softmax_with_mask", random_tensor({3, 5}, rng), [&, keep](Tape& t, Tape::NodeId x) {
      return t.sum(t.mul(t.softmax_with_mask(x, keep), t.constant(probe)));
    });
  }

  {
    const Tensor gain = random_tensor({6}, rng);
    const Tensor lnb = random_tensor({6}, rng);
    const Tensor probe = random_tensor({4, 6}, rng);
    check("layer_norm_input", random_tensor({4, 6}, rng), [&](Tape& t, Tape::NodeId x) {
      return t.sum(t.mul(t.layer_norm(x, t.constant(gain), t.constant(lnb)), t.constant(probe)));
    });
    const Tensor xfix = random_tensor({4, 6}, rng);
    check("layer_norm_gain", random_tensor({6}, rng), [&](Tape& t, Tape::NodeId g) {
      return t.sum(t.mul(t.layer_norm(t.constant(xfix), g, t.constant(lnb)), t.constant(probe)));
    });
    check("layer_norm_bias", random_tensor({6}, rng), [&](Tape& t, Tape::NodeId b) {
      return t.sum(t.mul(t.layer_norm(t.constant(xfix), t.constant(gain), b), t.constant(probe)));
    });
  }

  {
    // Keep pre-activations away from the kink so central differences are clean.
    Tensor x = random_tensor({4, 4}, rng);
    for (auto& v : x.data)
      if (std::fabs(v) < 0.05) v += v < 0 ? -0.1 : 0.1;
    const Tensor probe = random_tensor({4, 4}, rng);
    check("relu", x, [&](Tape& t, Tape::NodeId in) {
      return t.sum(t.mul(t.relu(in), t.constant(probe)));
    });
  }

  {
    Mask rows = {1, 1, 0, 1};
    const Tensor probe = random_tensor({3}, rng);
    check("mean_over_masked_rows", random_tensor({4, 3}, rng), [&, rows](Tape& t, Tape::NodeId x) {
      return t.sum(t.mul(t.mean_over_masked_rows(x, rows), t.constant(probe)));
    });
  }

  check("log_clamped", random_tensor({6}, rng), [&](Tape& t, Tape::NodeId x) {
    return t.sum(t.log_clamped(t.add_scalar(t.mul(x, x), 0.5), 1e-7));
  });

  {
    const Tensor probe = random_tensor({6}, rng);
    check("exp", random_tensor({6}, rng, 0.5), [&](Tape& t, Tape::NodeId x) {
      return t.sum(t.mul(t.exp(x), t.constant(probe)));
    });
  }

  {
    const Tensor probe = random_tensor({3, 7}, rng);
    check("concat_slice", random_tensor({3, 4}, rng), [&](Tape& t, Tape::NodeId x) {
      const Tape::NodeId s = t.slice_cols(x, 1, 3);
      return t.sum(t.mul(t.concat_cols(x, s), t.constant(probe)));
    });
  }

  {
    const Tensor probe = random_tensor({5, 2}, rng);
    check("transpose", random_tensor({2, 5}, rng), [&](Tape& t, Tape::NodeId x) {
      return t.sum(t.mul(t.transpose(x), t.constant(probe)));
    });
  }

  {
    const Tensor probe = random_tensor({6}, rng);
    check("cumsum_pick", random_tensor({6}, rng), [&](Tape& t, Tape::NodeId x) {
      const Tape::NodeId cs = t.cumsum(x);
      return t.add(t.sum(t.mul(cs, t.constant(probe))), t.pick(cs, 3));
    });
  }

  return items;
}

double loss_gradient_error(HazardNet& model, const std::vector<EncodedSample>& samples,
                           std::span<const int> time_bin, std::span<const int> event,
                           double w1, double w2, double step) {
  auto& params = model.params();
  double worst = 0.0;
  for (std::size_t target = 0; target < params.size(); ++target) {
    auto f = [&, target](Tape& t, Tape::NodeId x) {
      std::vector<Tape::NodeId> nodes;
      nodes.reserve(params.size());
      for (std::size_t i = 0; i < params.size(); ++i)
        nodes.push_back(i == target ? x : t.constant(params[i].value));
      std::vector<Tape::NodeId> ys;
      ys.reserve(samples.size());
      for (const auto& s : samples) ys.push_back(model.build_forward(t, nodes, s));
      return build_total_loss(t, ys, time_bin, event, w1, w2);
    };
    const double err = gradient_check(f, params[target].value, step);
    if (err > worst) worst = err;
  }
  return worst;
}

}  // namespace survt
