#include "ganax/model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ganax::model {

namespace {

[[noreturn]] void layer_error(const LayerSpec& l, const std::string& field,
                              const std::string& why) {
  throw UsageError("layer '" + l.layer_id + "': field '" + field + "' " + why);
}

}  // namespace

int out_h(const LayerSpec& l) {
  if (l.kind == LayerKind::Conv)
    return (l.in_h + 2 * l.padding - l.k_h) / l.stride + 1;
  return expanded_extent(l.in_h, l.stride, l.padding) - l.k_h + 1;
}

int out_w(const LayerSpec& l) {
  if (l.kind == LayerKind::Conv)
    return (l.in_w + 2 * l.padding - l.k_w) / l.stride + 1;
  return expanded_extent(l.in_w, l.stride, l.padding) - l.k_w + 1;
}

void validate(const LayerSpec& l) {
  if (l.layer_id.empty()) throw UsageError("layer with empty layer_id");
  if (l.in_h < 1) layer_error(l, "in_h", "must be >= 1");
  if (l.in_w < 1) layer_error(l, "in_w", "must be >= 1");
  if (l.in_c < 1) layer_error(l, "in_c", "must be >= 1");
  if (l.out_c < 1) layer_error(l, "out_c", "must be >= 1");
  if (l.k_h < 1) layer_error(l, "k_h", "must be >= 1");
  if (l.k_w < 1) layer_error(l, "k_w", "must be >= 1");
  if (l.stride < 1) layer_error(l, "stride", "must be >= 1");
  if (l.padding < 0) layer_error(l, "padding", "must be >= 0");
  if (l.kind == LayerKind::Conv) {
    if (l.in_h + 2 * l.padding < l.k_h)
      layer_error(l, "k_h", "exceeds padded input height");
    if (l.in_w + 2 * l.padding < l.k_w)
      layer_error(l, "k_w", "exceeds padded input width");
  } else {
    if (expanded_extent(l.in_h, l.stride, l.padding) < l.k_h)
      layer_error(l, "k_h", "exceeds expanded input height (output dim < 1)");
    if (expanded_extent(l.in_w, l.stride, l.padding) < l.k_w)
      layer_error(l, "k_w", "exceeds expanded input width (output dim < 1)");
  }
}

const char* to_string(LayerKind k) {
  return k == LayerKind::Conv ? "conv" : "tconv";
}

const char* to_string(ModelRole r) {
  return r == ModelRole::Generative ? "generative" : "discriminative";
}

namespace {

using nlohmann::json;

LayerKind parse_kind(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "tconv") return LayerKind::TConv;
  throw UsageError("unknown layer kind '" + s + "' (expected conv|tconv)");
}

ModelRole parse_role(const std::string& s) {
  if (s == "generative") return ModelRole::Generative;
  if (s == "discriminative") return ModelRole::Discriminative;
  throw UsageError("unknown model_role '" + s +
                   "' (expected generative|discriminative)");
}

int get_int(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key))
    throw UsageError(ctx + ": missing field '" + key + "'");
  if (!j[key].is_number_integer())
    throw UsageError(ctx + ": field '" + key + "' must be an integer");
  return j[key].get<int>();
}

}  // namespace

Workload parse_workload(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  Workload w;
  w.name = j.value("name", "");
  w.provenance = j.value("provenance", "");
  if (!j.contains("layers") || !j["layers"].is_array())
    throw UsageError("workload: missing 'layers' array");
  if (j["layers"].empty())
    throw UsageError("workload '" + w.name + "': empty layer list");
  for (const auto& lj : j["layers"]) {
    LayerSpec l;
    l.layer_id = lj.value("layer_id", "");
    const std::string ctx = "layer '" + l.layer_id + "'";
    if (!lj.contains("kind")) throw UsageError(ctx + ": missing field 'kind'");
    l.kind = parse_kind(lj["kind"].get<std::string>());
    l.in_h = get_int(lj, "in_h", ctx);
    l.in_w = get_int(lj, "in_w", ctx);
    l.in_c = get_int(lj, "in_c", ctx);
    l.out_c = get_int(lj, "out_c", ctx);
    l.k_h = get_int(lj, "k_h", ctx);
    l.k_w = get_int(lj, "k_w", ctx);
    l.stride = get_int(lj, "stride", ctx);
    l.padding = get_int(lj, "padding", ctx);
    if (!lj.contains("model_role"))
      throw UsageError(ctx + ": missing field 'model_role'");
    l.model_role = parse_role(lj["model_role"].get<std::string>());
    validate(l);
    w.layers.push_back(l);
  }
  return w;
}

std::string workload_to_json(const Workload& w) {
  json j;
  j["name"] = w.name;
  j["provenance"] = w.provenance;
  j["layers"] = json::array();
  for (const auto& l : w.layers) {
    json lj;
    lj["layer_id"] = l.layer_id;
    lj["kind"] = to_string(l.kind);
    lj["in_h"] = l.in_h;
    lj["in_w"] = l.in_w;
    lj["in_c"] = l.in_c;
    lj["out_c"] = l.out_c;
    lj["k_h"] = l.k_h;
    lj["k_w"] = l.k_w;
    lj["stride"] = l.stride;
    lj["padding"] = l.padding;
    lj["model_role"] = to_string(l.model_role);
    j["layers"].push_back(lj);
  }
  return j.dump(2) + "\n";
}

Workload load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open workload file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

void store_workload(const Workload& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write workload file: " + path);
  out << workload_to_json(w);
}

void validate_chain(const Workload& w) {
  for (std::size_t i = 0; i + 1 < w.layers.size(); ++i) {
    const auto& a = w.layers[i];
    const auto& b = w.layers[i + 1];
    if (out_h(a) != b.in_h || out_w(a) != b.in_w || a.out_c != b.in_c) {
      std::ostringstream os;
      os << "workload '" << w.name << "': layer '" << b.layer_id
         << "' input dims (" << b.in_c << "," << b.in_h << "," << b.in_w
         << ") do not match layer '" << a.layer_id << "' output dims ("
         << a.out_c << "," << out_h(a) << "," << out_w(a) << ")";
      throw UsageError(os.str());
    }
  }
}

}  // namespace ganax::model
