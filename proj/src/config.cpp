#include "csshap/config.hpp"

#include "csshap/error.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"

namespace csshap {

std::string to_string(BackgroundSource s) { return s == BackgroundSource::kTraining ? "training" : "zero"; }

BackgroundSource background_source_from_string(const std::string& name) {
  if (name == "training") return BackgroundSource::kTraining;
  if (name == "zero") return BackgroundSource::kZero;
  throw ConfigurationError("unknown background source '" + name + "' (expected training or zero)");
}

namespace {

WindowSpec window_from_json(const Json& j, const WindowSpec& fallback) {
  reject_unknown_keys(j, {"kind", "length", "hop"}, "window");
  std::string kind = to_string(fallback.kind());
  int length = fallback.length();
  int hop = fallback.hop();
  read_key(j, "kind", kind, "window");
  read_key(j, "length", length, "window");
  read_key(j, "hop", hop, "window");
  try {
    WindowSpec w(window_kind_from_string(kind), length, hop);
    w.require_cola();
    return w;
  } catch (const InvalidInputError& e) {
    throw ConfigurationError(std::string("window: ") + e.what());
  }
}

void model_from_json(const Json& j, ModelConfig& m) {
  const std::string ctx = "model";
  reject_unknown_keys(j, {"kind", "channels", "kernel_sizes", "head_widths", "seed"}, ctx);
  if (j.contains("kind")) {
    std::string kind;
    read_key(j, "kind", kind, ctx);
    const ModelKind k = model_kind_from_string(kind);
    if (k != m.kind) {
      const std::uint64_t seed = m.seed;
      m = k == ModelKind::kMlp ? default_mlp_config() : default_cnn_config();
      m.seed = seed;
    }
  }
  read_key(j, "channels", m.channels, ctx);
  read_key(j, "kernel_sizes", m.kernel_sizes, ctx);
  read_key(j, "head_widths", m.head_widths, ctx);
  read_key(j, "seed", m.seed, ctx);
}

void train_from_json(const Json& j, TrainHyper& t) {
  const std::string ctx = "train";
  reject_unknown_keys(j, {"epochs", "batch_size", "learning_rate", "lr_decay", "beta1", "beta2", "epsilon", "seed"},
                      ctx);
  read_key(j, "epochs", t.epochs, ctx);
  read_key(j, "batch_size", t.batch_size, ctx);
  read_key(j, "learning_rate", t.learning_rate, ctx);
  read_key(j, "lr_decay", t.lr_decay, ctx);
  read_key(j, "beta1", t.beta1, ctx);
  read_key(j, "beta2", t.beta2, ctx);
  read_key(j, "epsilon", t.epsilon, ctx);
  read_key(j, "seed", t.seed, ctx);
  if (t.epochs < 1 || t.batch_size < 1 || !(t.learning_rate > 0.0)) {
    throw ConfigurationError("train: epochs, batch_size and learning_rate must be positive");
  }
}

void attribution_from_json(const Json& j, RunConfig& c) {
  const std::string ctx = "attribution";
  reject_unknown_keys(j,
                      {"domain", "partition", "num_permutations", "background_size", "background", "target",
                       "estimator", "mode", "seed"},
                      ctx);
  AttributionConfig& a = c.attribution;
  std::string s;
  if (j.contains("domain")) {
    read_key(j, "domain", s, ctx);
    a.domain = domain_from_string(s);
  }
  if (j.contains("partition")) {
    std::vector<std::size_t> shape;
    read_key(j, "partition", shape, ctx);
    if (shape.size() != 2) throw ConfigurationError("attribution.partition must be [row_cells, col_cells]");
    a.partition = PartitionShape{shape[0], shape[1]};
  }
  read_key(j, "num_permutations", a.num_permutations, ctx);
  read_key(j, "background_size", c.background_size, ctx);
  if (j.contains("background")) {
    read_key(j, "background", s, ctx);
    c.background = background_source_from_string(s);
  }
  if (j.contains("target")) {
    read_key(j, "target", s, ctx);
    a.target = target_from_string(s);
  }
  if (j.contains("estimator")) {
    read_key(j, "estimator", s, ctx);
    a.estimator = estimator_from_string(s);
  }
  if (j.contains("mode")) {
    read_key(j, "mode", s, ctx);
    a.mode = shapley_mode_from_string(s);
  }
  read_key(j, "seed", a.seed, ctx);
  if (a.num_permutations < 2) throw ConfigurationError("attribution.num_permutations must be >= 2");
  if (c.background_size < 1) throw ConfigurationError("attribution.background_size must be >= 1");
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  const Json j = parse_json(text, "config");
  reject_unknown_keys(j, {"dataset", "window", "model", "train", "attribution", "out", "jobs"}, "config");
  RunConfig c;
  if (j.contains("dataset")) c.dataset = dataset_spec_from_json(j["dataset"].dump());
  if (j.contains("window")) c.attribution.window = window_from_json(j["window"], c.attribution.window);
  if (j.contains("model")) model_from_json(j["model"], c.model);
  if (j.contains("train")) train_from_json(j["train"], c.train);
  if (j.contains("attribution")) attribution_from_json(j["attribution"], c);
  std::string out = c.out.string();
  read_key(j, "out", out, "config");
  c.out = out;
  read_key(j, "jobs", c.jobs, "config");
  try {
    validate(c.dataset);
  } catch (const InvalidInputError& e) {
    throw ConfigurationError(std::string("dataset: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(io::read_text(path));
}

std::string run_config_json(const RunConfig& c) {
  Json model = Json::parse(model_config_json(c.model));
  model.erase("input_length");
  model.erase("class_count");
  const PartitionShape shape = c.attribution.partition.value_or(default_partition_shape(c.attribution.domain));
  Json j{{"dataset", Json::parse(dataset_spec_json(c.dataset))},
         {"window",
          {{"kind", to_string(c.attribution.window.kind())},
           {"length", c.attribution.window.length()},
           {"hop", c.attribution.window.hop()}}},
         {"model", model},
         {"train",
          {{"epochs", c.train.epochs},
           {"batch_size", c.train.batch_size},
           {"learning_rate", c.train.learning_rate},
           {"lr_decay", c.train.lr_decay},
           {"beta1", c.train.beta1},
           {"beta2", c.train.beta2},
           {"epsilon", c.train.epsilon},
           {"seed", c.train.seed}}},
         {"attribution",
          {{"domain", to_string(c.attribution.domain)},
           {"partition", {shape.row_cells, shape.col_cells}},
           {"num_permutations", c.attribution.num_permutations},
           {"background_size", c.background_size},
           {"background", to_string(c.background)},
           {"target", to_string(c.attribution.target)},
           {"estimator", to_string(c.attribution.estimator)},
           {"mode", to_string(c.attribution.mode)},
           {"seed", c.attribution.seed}}},
         {"out", c.out.string()},
         {"jobs", c.jobs}};
  return j.dump(2);
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.dataset.seed = seed;
  c.model.seed = seed;
  c.train.seed = seed;
  c.attribution.seed = seed;
}

}  // namespace csshap
