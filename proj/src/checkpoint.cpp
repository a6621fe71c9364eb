#include "roic/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "roic/errors.hpp"

namespace roic {

namespace {

using nlohmann::json;

json tensor_to_json(const ConstTensorView& v) {
  json values = json::array();
  for (Index r = 0; r < v.rows; ++r) {
    for (Index c = 0; c < v.cols; ++c) {
      values.push_back(v.data[c * v.rows + r]);  // column-major storage
    }
  }
  return json{{"shape", {v.rows, v.cols}}, {"values", std::move(values)}};
}

void tensor_from_json(const json& obj, const TensorView& v) {
  if (!obj.is_object() || !obj.contains("shape") || !obj.contains("values")) {
    throw SchemaError("tensor \"" + v.name + "\": malformed entry");
  }
  const auto& shape = obj["shape"];
  if (!shape.is_array() || shape.size() != 2 ||
      shape[0].get<Index>() != v.rows || shape[1].get<Index>() != v.cols) {
    throw SchemaError("tensor \"" + v.name + "\": shape mismatch");
  }
  const auto& values = obj["values"];
  if (!values.is_array() || static_cast<Index>(values.size()) != v.size()) {
    throw SchemaError("tensor \"" + v.name + "\": value count mismatch");
  }
  Index i = 0;
  for (Index r = 0; r < v.rows; ++r) {
    for (Index c = 0; c < v.cols; ++c, ++i) {
      v.data[c * v.rows + r] = values[i].get<double>();
    }
  }
}

template <class Params>
json params_to_json(const Params& p) {
  json out = json::object();
  for (const ConstTensorView& v : tensor_views(p)) {
    out[v.name] = tensor_to_json(v);
  }
  return out;
}

template <class Params>
void params_from_json(const json& obj, Params& p) {
  const std::vector<TensorView> views = tensor_views(p);
  if (!obj.is_object() || obj.size() != views.size()) {
    throw SchemaError("parameter block: tensor set mismatch");
  }
  for (const TensorView& v : views) {
    if (!obj.contains(v.name)) {
      throw SchemaError("parameter block: missing tensor \"" + v.name + "\"");
    }
    tensor_from_json(obj[v.name], v);
  }
}

json config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr0", c.lr0},
              {"weight_decay", c.weight_decay},
              {"T", c.T},
              {"beta_start", c.beta_start},
              {"beta_end", c.beta_end},
              {"use_advisor", c.use_advisor},
              {"seed", c.seed},
              {"eval_every", c.eval_every},
              {"advisor_epochs", c.advisor_epochs},
              {"advisor_lr0", c.advisor_lr0},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"feature_dim", c.feature_dim}};
}

TrainConfig config_from_json(const json& obj) {
  TrainConfig c;
  try {
    c.epochs = obj.at("epochs").get<int>();
    c.batch_size = obj.at("batch_size").get<int>();
    c.lr0 = obj.at("lr0").get<double>();
    c.weight_decay = obj.at("weight_decay").get<double>();
    c.T = obj.at("T").get<int>();
    c.beta_start = obj.at("beta_start").get<double>();
    c.beta_end = obj.at("beta_end").get<double>();
    c.use_advisor = obj.at("use_advisor").get<bool>();
    c.seed = obj.at("seed").get<std::uint64_t>();
    c.eval_every = obj.at("eval_every").get<int>();
    c.advisor_epochs = obj.at("advisor_epochs").get<int>();
    c.advisor_lr0 = obj.at("advisor_lr0").get<double>();
    c.embed_dim = obj.at("embed_dim").get<int>();
    c.hidden_dim = obj.at("hidden_dim").get<int>();
    c.feature_dim = obj.at("feature_dim").get<int>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config block: ") + e.what());
  }
  return c;
}

json moments_to_json(const std::vector<Vector>& moments,
                     const std::vector<ConstTensorView>& views) {
  json out = json::object();
  for (std::size_t i = 0; i < views.size(); ++i) {
    json values = json::array();
    for (Index k = 0; k < moments[i].size(); ++k) values.push_back(moments[i][k]);
    out[views[i].name] = std::move(values);
  }
  return out;
}

std::vector<Vector> moments_from_json(
    const json& obj, const std::vector<ConstTensorView>& views) {
  std::vector<Vector> moments;
  moments.reserve(views.size());
  for (const ConstTensorView& v : views) {
    if (!obj.contains(v.name)) {
      throw SchemaError("optimizer block: missing moments for \"" + v.name +
                        "\"");
    }
    const auto& values = obj[v.name];
    if (!values.is_array() || static_cast<Index>(values.size()) != v.size()) {
      throw SchemaError("optimizer block: moment size mismatch for \"" +
                        v.name + "\"");
    }
    Vector m(v.size());
    for (Index k = 0; k < m.size(); ++k) m[k] = values[k].get<double>();
    moments.push_back(std::move(m));
  }
  return moments;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json doc;
  doc["schema_version"] = ckpt.schema_version;
  doc["config"] = config_to_json(ckpt.config);
  doc["labels"] = ckpt.labels;
  doc["vocab"] = ckpt.vocab;
  doc["epoch"] = ckpt.epoch;
  doc["rng_state"] = ckpt.rng_state;
  doc["estimator"] = params_to_json(ckpt.estimator);
  if (ckpt.advisor.has_value()) {
    doc["advisor"] = params_to_json(*ckpt.advisor);
  }
  const std::vector<ConstTensorView> views = tensor_views(ckpt.estimator);
  doc["optimizer"] = json{{"step", ckpt.opt_step},
                          {"m", moments_to_json(ckpt.opt_m, views)},
                          {"v", moments_to_json(ckpt.opt_v, views)}};
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw SchemaError("checkpoint: missing schema_version");
  }
  const int version = doc["schema_version"].get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw SchemaError("checkpoint: unsupported schema_version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointSchemaVersion) + ")");
  }

  Checkpoint ckpt;
  ckpt.schema_version = version;
  try {
    ckpt.config = config_from_json(doc.at("config"));
    ckpt.labels = doc.at("labels").get<std::vector<std::string>>();
    ckpt.vocab = doc.at("vocab").get<std::vector<std::string>>();
    ckpt.epoch = doc.at("epoch").get<int>();
    ckpt.rng_state = doc.at("rng_state").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  if (ckpt.labels.size() < 2) {
    throw SchemaError("checkpoint: needs at least 2 labels");
  }

  const EncoderDims dims{static_cast<int>(ckpt.vocab.size()),
                         ckpt.config.embed_dim, ckpt.config.hidden_dim,
                         ckpt.config.feature_dim};
  ckpt.estimator = EstimatorParams::init(
      static_cast<int>(ckpt.labels.size()), ckpt.config.T, dims, 0);
  params_from_json(doc.at("estimator"), ckpt.estimator);

  if (doc.contains("advisor")) {
    AdvisorModel advisor = AdvisorModel::init(
        static_cast<int>(ckpt.labels.size()), dims, 0);
    params_from_json(doc.at("advisor"), advisor);
    ckpt.advisor = std::move(advisor);
  }

  const auto& opt = doc.at("optimizer");
  const std::vector<ConstTensorView> views =
      tensor_views(std::as_const(ckpt.estimator));
  try {
    ckpt.opt_step = opt.at("step").get<long>();
    ckpt.opt_m = moments_from_json(opt.at("m"), views);
    ckpt.opt_v = moments_from_json(opt.at("v"), views);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint optimizer block: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(ckpt);
  out << "\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace roic
