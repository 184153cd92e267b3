#include "doctest.h"

#include "ganax/runner.hpp"
#include "ganax/rng.hpp"

using namespace ganax;
using namespace ganax::runner;
using model::LayerKind;
using model::LayerSpec;
using model::Workload;

namespace {

Workload three_layer_workload() {
  Workload w;
  w.name = "mini";
  w.provenance = "test fixture";
  int in = 4;
  for (int i = 0; i < 3; ++i) {
    LayerSpec l;
    l.layer_id = "g" + std::to_string(i);
    l.kind = LayerKind::TConv;
    l.in_h = l.in_w = in;
    l.in_c = i == 0 ? 2 : 2;
    l.out_c = 2;
    l.k_h = l.k_w = 3;
    l.stride = 2;
    l.padding = 1;
    l.model_role = model::ModelRole::Generative;
    w.layers.push_back(l);
    in = model::out_h(l);
  }
  return w;
}

}  // namespace

TEST_CASE("run_workload verifies every layer in both modes") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.seed = 7;
  auto res = run_workload(w, spec);
  CHECK(res.all_verified);
  REQUIRE(res.per_mode.count(SimMode::Ganax) == 1);
  REQUIRE(res.per_mode.count(SimMode::BaselineDense) == 1);
  CHECK(res.per_mode[SimMode::Ganax].size() == 3);
  REQUIRE(res.comparison.has_value());
  CHECK(res.comparison->overall_speedup > 1.0);
  for (const auto& m : res.per_mode[SimMode::Ganax]) CHECK(m.verified);
}

TEST_CASE("chained mode equals chained golden kernels") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.seed = 9;
  spec.chained = true;
  auto res = run_workload(w, spec);
  CHECK(res.all_verified);
}

TEST_CASE("float mode verifies within tolerance") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.seed = 11;
  spec.elem = ElemMode::Float32;
  spec.modes = {SimMode::Ganax};
  auto res = run_workload(w, spec);
  CHECK(res.all_verified);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.seed = 13;
  spec.threads = 1;
  auto a = run_workload(w, spec);
  spec.threads = 4;
  auto b = run_workload(w, spec);
  CHECK(report_json(a) == report_json(b));
  CHECK(report_csv(a) == report_csv(b));
  // Same spec again, sequentially: still identical.
  spec.threads = 1;
  auto c = run_workload(w, spec);
  CHECK(report_json(a) == report_json(c));
}

TEST_CASE("different seeds give different tensors but still verify") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.modes = {SimMode::Ganax};
  spec.seed = 1;
  auto a = run_workload(w, spec);
  spec.seed = 2;
  auto b = run_workload(w, spec);
  CHECK(a.all_verified);
  CHECK(b.all_verified);
  CHECK(report_json(a) != report_json(b));
  CHECK(gen_input(w.layers[0], 1, 0).data() != gen_input(w.layers[0], 2, 0).data());
  CHECK(gen_input(w.layers[0], 1, 0) == gen_input(w.layers[0], 1, 0));
}

TEST_CASE("array config overrides parse") {
  auto c = parse_array_config(R"({"num_pvs": 8, "activation": "relu",
                                  "dram_stall_model": true})");
  CHECK(c.num_pvs == 8);
  CHECK(c.activation == Activation::Relu);
  CHECK(c.dram_stall_model);
  CHECK(c.pes_per_pv == 16);  // untouched default
  CHECK_THROWS_AS(parse_array_config(R"({"num_pvs": 99})"), UsageError);
  CHECK_THROWS_AS(parse_array_config("nope"), ParseError);
}

TEST_CASE("relu runs verify end to end") {
  auto w = three_layer_workload();
  RunSpec spec;
  spec.seed = 21;
  spec.config.activation = Activation::Relu;
  auto res = run_workload(w, spec);
  CHECK(res.all_verified);
}
