#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "migdir/errors.hpp"
#include "migdir/model.hpp"
#include "migdir/optimizer.hpp"
#include "migdir/rng.hpp"

using namespace migdir;

namespace {

std::int64_t layer_param_count(const Model& m, std::size_t li) {
  return static_cast<std::int64_t>(m.params[li].w.data.size() +
                                   m.params[li].b.data.size());
}

Tensor random_batch(Rng& rng, int n, int size) {
  Tensor t({n, size, size, 1});
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

void fill_grads(Model& m, Rng& rng) {
  for (auto& g : m.grads) {
    for (double& v : g.w.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : g.b.data) v = rng.uniform(-1.0, 1.0);
  }
}

bool params_equal(const Model& a, const Model& b) {
  if (a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].w.data != b.params[i].w.data) return false;
    if (a.params[i].b.data != b.params[i].b.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("probing architecture has the published parameter budget") {
  const Model m = probing_cnn(128, ModelScale::Paper, 2,
                              ActivationKind::SigmoidLike, 7);
  REQUIRE(m.layers.size() == 8);
  CHECK(layer_param_count(m, 0) == 416);      // conv 5x5x1x16
  CHECK(layer_param_count(m, 2) == 4640);     // conv 3x3x16x32
  CHECK(layer_param_count(m, 5) == 7373056);  // dense 28800 -> 256
  CHECK(layer_param_count(m, 6) == 4112);     // dense 256 -> 16
  CHECK(layer_param_count(m, 7) == 34);       // head, two outputs
  CHECK(param_count(m) == 7382258);

  const Model one = probing_cnn(128, ModelScale::Paper, 1,
                                ActivationKind::Cyclic, 7);
  CHECK(layer_param_count(one, 7) == 17);  // single-output head
  CHECK(param_count(one) == 7382241);

  const Model desk = probing_cnn(32, ModelScale::Desk, 2,
                                 ActivationKind::Identity, 7);
  CHECK(param_count(desk) == 77330);
}

TEST_CASE("forward pass walks the expected shapes") {
  Rng rng(11);
  const Model m = probing_cnn(128, ModelScale::Paper, 2,
                              ActivationKind::SigmoidLike, 3);
  const Tensor batch = random_batch(rng, 1, 128);
  ForwardTrace trace;
  const Tensor out = forward(m, batch, &trace);
  CHECK(out.shape == std::vector<int>{1, 2});
  CHECK(trace.preact[0].shape == std::vector<int>{1, 124, 124, 16});
  CHECK(trace.inputs[2].shape == std::vector<int>{1, 62, 62, 16});
  CHECK(trace.preact[2].shape == std::vector<int>{1, 60, 60, 32});
  CHECK(trace.inputs[4].shape == std::vector<int>{1, 30, 30, 32});
  CHECK(trace.inputs[5].shape == std::vector<int>{1, 28800});
  for (double v : out.data) {
    CHECK(std::abs(v) <= 1.0);  // SigmoidLike head stays inside (-1, 1)
  }

  const Model desk = probing_cnn(64, ModelScale::Desk, 2,
                                 ActivationKind::Identity, 3);
  ForwardTrace dtrace;
  forward(desk, random_batch(rng, 2, 64), &dtrace);
  CHECK(dtrace.preact[0].shape == std::vector<int>{2, 60, 60, 8});
}

TEST_CASE("forward is deterministic and zero weights give zero output") {
  Rng rng(12);
  Model m = probing_cnn(32, ModelScale::Desk, 2, ActivationKind::Identity, 9);
  const Tensor batch = random_batch(rng, 3, 32);
  const Tensor a = forward(m, batch, nullptr);
  const Tensor b = forward(m, batch, nullptr);
  CHECK(a.data == b.data);

  for (auto& p : m.params) {
    std::fill(p.w.data.begin(), p.w.data.end(), 0.0);
    std::fill(p.b.data.begin(), p.b.data.end(), 0.0);
  }
  const Tensor z = forward(m, batch, nullptr);
  for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("forward reports the layer that produced a non-finite value") {
  Rng rng(13);
  Model m = probing_cnn(32, ModelScale::Desk, 2, ActivationKind::Identity, 9);
  m.params[2].b.data[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(forward(m, random_batch(rng, 1, 32), nullptr),
                       "non-finite value in layer 2", NumericError);
}

TEST_CASE("backward matches naive finite differences on a toy stack") {
  // Small enough to difference every parameter with a full re-forward.
  const std::vector<LayerSpec> stack{ConvSpec{3, 3, 2}, PoolSpec{},
                                     FlattenSpec{}, DenseSpec{2}};
  const double margin = 1e-3;

  // Pick a seed whose forward pass keeps every branch away from its switch
  // point, so the difference quotient sees one smooth function.
  Model m;
  Tensor x({1, 8, 8, 1});
  ForwardTrace trace;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 50 && !found; ++seed) {
    m = build_model(8, stack, 2, ActivationKind::Identity, seed);
    Rng rng(derive_seed(seed, 77));
    for (double& v : x.data) v = rng.uniform(0.0, 1.0);
    forward(m, x, &trace);
    found = true;
    for (double z : trace.preact[0].data) {
      if (std::abs(z) < margin) found = false;
    }
    // Pool input must have a clear winner in every 2x2 window.
    const Tensor& pin = trace.inputs[1];
    for (int py = 0; py < 3 && found; ++py) {
      for (int px = 0; px < 3; ++px) {
        for (int c = 0; c < 2; ++c) {
          double best = -1.0, second = -1.0;
          for (int k = 0; k < 4; ++k) {
            const int y = 2 * py + k / 2, xx = 2 * px + k % 2;
            const double v = pin.data[(y * 6 + xx) * 2 + c];
            if (v > best) {
              second = best;
              best = v;
            } else if (v > second) {
              second = v;
            }
          }
          if (best - second < margin) found = false;
        }
      }
    }
  }
  REQUIRE(found);

  // phi = <c, output>; backward with dloss = c gives dphi/dparam.
  const std::vector<double> c{0.7, -1.3};
  auto phi = [&](const Model& model) {
    const Tensor out = forward(model, x, nullptr);
    return c[0] * out.data[0] + c[1] * out.data[1];
  };
  zero_gradients(m);
  Tensor dl({1, 2});
  dl.data = c;
  backward(m, trace, dl);

  const double h = 1e-4;
  double max_rel = 0.0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    for (auto field : {&LayerParams::w, &LayerParams::b}) {
      auto& data = (m.params[li].*field).data;
      const auto& gdata = (m.grads[li].*field).data;
      for (std::size_t k = 0; k < data.size(); ++k) {
        const double keep = data[k];
        data[k] = keep + h;
        const double up = phi(m);
        data[k] = keep - h;
        const double dn = phi(m);
        data[k] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(gdata[k] - fd) /
                           std::max({std::abs(gdata[k]), std::abs(fd), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  CHECK(max_rel < 1e-4);

  SUBCASE("backward is linear in the loss gradient") {
    Model m2 = m;
    zero_gradients(m2);
    Tensor dl2({1, 2});
    dl2.data = {2.0 * c[0], 2.0 * c[1]};  // doubling is exact in binary
    backward(m2, trace, dl2);
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      for (std::size_t k = 0; k < m.grads[li].w.data.size(); ++k) {
        CHECK(m2.grads[li].w.data[k] == 2.0 * m.grads[li].w.data[k]);
      }
      for (std::size_t k = 0; k < m.grads[li].b.data.size(); ++k) {
        CHECK(m2.grads[li].b.data[k] == 2.0 * m.grads[li].b.data[k]);
      }
    }
  }

  SUBCASE("zero loss gradient leaves the gradients at zero") {
    Model m2 = m;
    zero_gradients(m2);
    backward(m2, trace, Tensor({1, 2}));
    for (const auto& g : m2.grads) {
      for (double v : g.w.data) CHECK(v == 0.0);
      for (double v : g.b.data) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("backward refuses a trace that forward never filled") {
  Model m = probing_cnn(32, ModelScale::Desk, 2, ActivationKind::Identity, 1);
  ForwardTrace empty;
  CHECK_THROWS_AS(backward(m, empty, Tensor({1, 2})), std::logic_error);
}

TEST_CASE("optimizer steps are the textbook updates") {
  const std::vector<LayerSpec> stack{FlattenSpec{}, DenseSpec{2}};
  Model m = build_model(4, stack, 2, ActivationKind::Identity, 0);

  SUBCASE("plain SGD") {
    for (auto& p : m.params) {
      std::fill(p.w.data.begin(), p.w.data.end(), 1.0);
      std::fill(p.b.data.begin(), p.b.data.end(), 1.0);
    }
    for (auto& g : m.grads) {
      std::fill(g.w.data.begin(), g.w.data.end(), 0.5);
      std::fill(g.b.data.begin(), g.b.data.end(), 0.5);
    }
    Optimizer opt(SgdConfig{0.1, 0.0}, m);
    opt.step(m);
    CHECK(opt.steps() == 1);
    for (const auto& p : m.params) {
      for (double v : p.w.data) CHECK(v == 0.95);
      for (double v : p.b.data) CHECK(v == 0.95);
    }
  }

  SUBCASE("zero gradients change nothing, bit for bit") {
    const Model before = m;
    zero_gradients(m);
    Optimizer sgd(SgdConfig{}, m);
    sgd.step(m);
    CHECK(params_equal(m, before));
    Optimizer adam(AdamConfig{}, m);
    adam.step(m);
    CHECK(params_equal(m, before));
  }

  SUBCASE("two identical runs stay bit-identical for ten Adam steps") {
    Model m2 = m;
    Optimizer o1(AdamConfig{}, m), o2(AdamConfig{}, m2);
    for (int s = 0; s < 10; ++s) {
      Rng rng(derive_seed(99, s));
      fill_grads(m, rng);
      for (std::size_t li = 0; li < m.grads.size(); ++li) {
        m2.grads[li] = m.grads[li];
      }
      o1.step(m);
      o2.step(m2);
    }
    CHECK(params_equal(m, m2));
    CHECK(!params_equal(m, build_model(4, stack, 2, ActivationKind::Identity,
                                       0)));  // it actually moved
  }
}

TEST_CASE("checkpoints round-trip bit for bit") {
  Rng rng(21);
  const std::string path = "ckpt_roundtrip_test.bin";
  Model m = probing_cnn(32, ModelScale::Desk, 2, ActivationKind::SigmoidLike,
                        1234);
  const Tensor batch = random_batch(rng, 2, 32);
  const Tensor out_before = forward(m, batch, nullptr);

  save_model(m, path);
  const Model loaded = load_model(path);
  CHECK(loaded.input_size == m.input_size);
  CHECK(loaded.head_arity == m.head_arity);
  CHECK(loaded.head_activation == m.head_activation);
  CHECK(loaded.init_seed == m.init_seed);
  CHECK(params_equal(loaded, m));
  const Tensor out_after = forward(loaded, batch, nullptr);
  CHECK(out_before.data == out_after.data);

  SUBCASE("saving twice produces identical bytes") {
    const std::string again = "ckpt_roundtrip_test2.bin";
    save_model(m, again);
    auto slurp = [](const std::string& p) {
      std::FILE* f = std::fopen(p.c_str(), "rb");
      REQUIRE(f != nullptr);
      std::string bytes;
      char buf[4096];
      std::size_t got;
      while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) {
        bytes.append(buf, got);
      }
      std::fclose(f);
      return bytes;
    };
    CHECK(slurp(path) == slurp(again));
    std::remove(again.c_str());
  }
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects damaged files") {
  CHECK_THROWS_AS(load_model("no_such_checkpoint.bin"), ParseError);

  const std::string path = "ckpt_damage_test.bin";
  auto write_bytes = [&](const std::string& bytes) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
  };

  SUBCASE("header is not JSON") {
    write_bytes(std::string("this is not a header") + '\0' + "xxxx");
    CHECK_THROWS_AS(load_model(path), ParseError);
  }

  SUBCASE("header terminator missing") {
    write_bytes("{\"version\":1}");
    CHECK_THROWS_AS(load_model(path), ParseError);
  }

  SUBCASE("parameter blob truncated") {
    Model m = build_model(4, {FlattenSpec{}, DenseSpec{2}}, 2,
                          ActivationKind::Identity, 5);
    save_model(m, path);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string bytes;
    char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) bytes.append(buf, got);
    std::fclose(f);
    write_bytes(bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_model(path), ParseError);

    write_bytes(bytes + "!");  // one byte too many is also a parse failure
    CHECK_THROWS_AS(load_model(path), ParseError);
  }
  std::remove(path.c_str());
}

TEST_CASE("model builder rejects malformed stacks") {
  const auto build = [](std::vector<LayerSpec> layers, int arity,
                        ActivationKind act) {
    return build_model(16, std::move(layers), arity, act, 0);
  };
  // Dense before flatten.
  CHECK_THROWS_AS(build({DenseSpec{2}}, 2, ActivationKind::Identity),
                  ConfigError);
  // Conv after flatten.
  CHECK_THROWS_AS(
      build({FlattenSpec{}, ConvSpec{3, 3, 2}, DenseSpec{2}}, 2,
            ActivationKind::Identity),
      ConfigError);
  // Kernel larger than its input.
  CHECK_THROWS_AS(
      build({ConvSpec{17, 17, 2}, FlattenSpec{}, DenseSpec{2}}, 2,
            ActivationKind::Identity),
      ConfigError);
  // Head that never flattens.
  CHECK_THROWS_AS(build({ConvSpec{3, 3, 2}}, 2, ActivationKind::Identity),
                  ConfigError);
  // Last dense width must equal the head arity.
  CHECK_THROWS_AS(build({FlattenSpec{}, DenseSpec{3}}, 2,
                        ActivationKind::Identity),
                  ConfigError);
  // Activation and arity must agree: cyclic head is single-output.
  CHECK_THROWS_AS(build({FlattenSpec{}, DenseSpec{2}}, 2,
                        ActivationKind::Cyclic),
                  ConfigError);
  CHECK_THROWS_AS(build({FlattenSpec{}, DenseSpec{1}}, 1,
                        ActivationKind::Identity),
                  ConfigError);
  // The probing factory only knows the three published input sizes.
  CHECK_THROWS_AS(probing_cnn(48, ModelScale::Desk, 2,
                              ActivationKind::Identity, 0),
                  ConfigError);
}
