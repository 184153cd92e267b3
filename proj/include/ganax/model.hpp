#pragma once

#include <string>
#include <vector>

#include "ganax/tensor.hpp"

namespace ganax::model {

enum class LayerKind { Conv, TConv };
enum class ModelRole { Generative, Discriminative };

// Geometry of one convolution or transposed-convolution layer.
//
// For TConv, `stride` is the zero-insertion factor: stride-1 zero rows and
// columns are inserted between input elements, then `padding` zero rows and
// columns are added on every border, and a stride-1 convolution slides over
// the expanded map. A nonzero input element (i, j) therefore sits at
// expanded position (padding + stride*i, padding + stride*j), and the
// expanded extent is (in - 1)*stride + 1 + 2*padding per axis.
struct LayerSpec {
  std::string layer_id;
  LayerKind kind = LayerKind::Conv;
  int in_h = 1;
  int in_w = 1;
  int in_c = 1;
  int out_c = 1;
  int k_h = 1;
  int k_w = 1;
  int stride = 1;
  int padding = 0;
  ModelRole model_role = ModelRole::Discriminative;
};

// Expanded extent of a TConv input along one axis.
inline int expanded_extent(int in, int stride, int padding) {
  return (in - 1) * stride + 1 + 2 * padding;
}

int out_h(const LayerSpec& l);
int out_w(const LayerSpec& l);

// Throws UsageError naming the layer and offending field.
void validate(const LayerSpec& l);

struct Workload {
  std::string name;
  std::string provenance;
  std::vector<LayerSpec> layers;
};

// Workload files are JSON mirroring LayerSpec field-for-field.
Workload load_workload(const std::string& path);
void store_workload(const Workload& w, const std::string& path);
Workload parse_workload(const std::string& json_text);
std::string workload_to_json(const Workload& w);

// Chained mode: layer i+1 input dims must equal layer i output dims.
void validate_chain(const Workload& w);

const char* to_string(LayerKind k);
const char* to_string(ModelRole r);

}  // namespace ganax::model
