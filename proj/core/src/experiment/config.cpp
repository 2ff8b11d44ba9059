// Copyright 2026 The JNF Authors.
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

#include "jnf/experiment/config.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <set>

#include "jnf/error.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::experiment {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::jmvae_gaussian: return "jmvae_gaussian";
    case Variant::jnf: return "jnf";
    case Variant::jnf_dcca: return "jnf_dcca";
    case Variant::jmvae_onestep: return "jmvae_onestep";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::jmvae_gaussian, Variant::jnf, Variant::jnf_dcca, Variant::jmvae_onestep}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorCode::invalid_config, "unknown model.variant '" + name + "'");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::invalid_config, "invalid value '" + value + "' for " + key);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < INT32_MIN || x > INT32_MAX) bad_value(key, v);
    return static_cast<int>(x);
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') bad_value(key, v);
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v);
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  try {
    return vae::parse_ints(v);
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  try {
    return vae::parse_doubles(v);
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
  /// Emitted by to_manifest only when this returns true.
  std::function<bool()> present = [] { return true; };
};

#define JNF_INT_FIELD(k, ref) \
  Field { k, [&c] { return std::to_string(ref); }, [&c](const std::string& v) { ref = to_int(k, v); } }
#define JNF_DOUBLE_FIELD(k, ref) \
  Field { k, [&c] { return io::format_double(ref); }, [&c](const std::string& v) { ref = to_double(k, v); } }
#define JNF_BOOL_FIELD(k, ref) \
  Field { k, [&c] { return from_bool(ref); }, [&c](const std::string& v) { ref = to_bool(k, v); } }
#define JNF_INTS_FIELD(k, ref) \
  Field { k, [&c] { return vae::format_ints(ref); }, [&c](const std::string& v) { ref = to_ints(k, v); } }

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f{
      Field{"dataset.kind", [&c] { return std::string(c.dataset.kind == DatasetKind::toy ? "toy" : "directory"); },
            [&c](const std::string& v) {
              if (v == "toy") c.dataset.kind = DatasetKind::toy;
              else if (v == "directory") c.dataset.kind = DatasetKind::directory;
              else bad_value("dataset.kind", v);
            }},
      Field{"dataset.path", [&c] { return c.dataset.path; }, [&c](const std::string& v) { c.dataset.path = v; },
            [&c] { return c.dataset.kind == DatasetKind::directory; }},
      JNF_INT_FIELD("dataset.n_validation", c.dataset.n_validation),
      JNF_INT_FIELD("dataset.n_test", c.dataset.n_test),
      JNF_INT_FIELD("toy.image_side", c.dataset.toy.image_side),
      JNF_INT_FIELD("toy.size_min", c.dataset.toy.size_min),
      JNF_INT_FIELD("toy.size_max", c.dataset.toy.size_max),
      JNF_INT_FIELD("toy.outline_thickness", c.dataset.toy.outline_thickness),
      JNF_DOUBLE_FIELD("toy.fill_probability", c.dataset.toy.fill_probability),
      JNF_INT_FIELD("toy.n_samples", c.dataset.toy.n_samples),
      JNF_INT_FIELD("toy.shared_bits", c.dataset.toy.shared_bits),
      Field{"toy.seed", [&c] { return std::to_string(c.dataset.toy.seed); },
            [&c](const std::string& v) { c.dataset.toy.seed = to_u64("toy.seed", v); }},
      Field{"model.variant", [&c] { return std::string(to_string(c.variant)); },
            [&c](const std::string& v) { c.variant = parse_variant(v); }},
      JNF_INT_FIELD("model.latent_dim", c.latent_dim),
      JNF_INTS_FIELD("joint.encoder_hidden", c.encoder_hidden),
      JNF_INTS_FIELD("joint.decoder_hidden", c.decoder_hidden),
      JNF_INT_FIELD("flow.n_blocks", c.flow.n_blocks),
      JNF_INTS_FIELD("flow.hidden_layers", c.flow.made_hidden),
      JNF_BOOL_FIELD("flow.conditional", c.flow.conditional),
      JNF_INTS_FIELD("flow.encoder_hidden", c.flow.encoder_hidden),
      JNF_DOUBLE_FIELD("flow.scale_clamp", c.flow.scale_clamp),
      JNF_INT_FIELD("dcca.output_dim", c.dcca.output_dim),
      Field{"dcca.d_keep", [&c] { return c.dcca.d_keep; }, [&c](const std::string& v) { c.dcca.d_keep = v; }},
      JNF_DOUBLE_FIELD("dcca.tau_fraction", c.dcca.tau_fraction),
      JNF_DOUBLE_FIELD("dcca.regularizer", c.dcca.regularizer),
      JNF_INTS_FIELD("dcca.hidden", c.dcca.hidden),
      JNF_INT_FIELD("dcca.epochs", c.dcca.epochs),
      JNF_INT_FIELD("dcca.batch_size", c.dcca.batch_size),
      JNF_DOUBLE_FIELD("dcca.lr", c.dcca.lr),
      JNF_BOOL_FIELD("dcca.retrain_at_keep", c.dcca.retrain_at_keep),
      JNF_INT_FIELD("training.epochs", c.training.epochs),
      JNF_INT_FIELD("training.epochs_step1", c.training.epochs_step1),
      JNF_INT_FIELD("training.epochs_step2", c.training.epochs_step2),
      JNF_DOUBLE_FIELD("training.lr", c.training.lr),
      JNF_INT_FIELD("training.batch_size", c.training.batch_size),
      Field{"training.reconstruction_weights", [&c] { return vae::format_doubles(c.training.reconstruction_weights); },
            [&c](const std::string& v) {
              c.training.reconstruction_weights = to_doubles("training.reconstruction_weights", v);
            }},
      JNF_DOUBLE_FIELD("training.clip_norm", c.training.clip_norm),
      JNF_DOUBLE_FIELD("training.alpha", c.training.alpha),
      JNF_INT_FIELD("training.warmup_epochs", c.training.warmup_epochs),
      JNF_DOUBLE_FIELD("hmc.eps", c.hmc.eps),
      JNF_INT_FIELD("hmc.steps", c.hmc.steps),
      JNF_INT_FIELD("hmc.chains", c.hmc.chains),
      JNF_INT_FIELD("hmc.burn_in", c.hmc.burn_in),
      JNF_INT_FIELD("hmc.samples_per_chain", c.hmc.samples_per_chain),
      JNF_DOUBLE_FIELD("hmc.step_jitter", c.hmc.step_jitter),
      JNF_BOOL_FIELD("hmc.adapt_metric", c.hmc.adapt_metric),
      JNF_INT_FIELD("eval.n_is", c.eval.n_is),
      JNF_INT_FIELD("eval.n_mc", c.eval.n_mc),
      JNF_INT_FIELD("eval.n_likelihood", c.eval.n_likelihood),
      JNF_INT_FIELD("eval.coherence_samples", c.eval.coherence_samples),
      JNF_INT_FIELD("eval.fid_samples", c.eval.fid_samples),
      JNF_INT_FIELD("eval.vi_bound_pairs", c.eval.vi_bound_pairs),
      JNF_INT_FIELD("eval.vi_bound_n_mc", c.eval.vi_bound_n_mc),
      JNF_BOOL_FIELD("eval.likelihood_samples", c.eval.likelihood_samples),
      JNF_INT_FIELD("eval.poe_sources", c.eval.poe_sources),
      JNF_INTS_FIELD("classifier.hidden", c.classifier.hidden),
      JNF_INT_FIELD("classifier.epochs", c.classifier.epochs),
      JNF_INT_FIELD("classifier.batch_size", c.classifier.batch_size),
      JNF_DOUBLE_FIELD("classifier.lr", c.classifier.lr),
      JNF_DOUBLE_FIELD("classifier.accuracy_floor", c.classifier.accuracy_floor),
      Field{"seed", [&c] { return std::to_string(c.seed); },
            [&c](const std::string& v) { c.seed = to_u64("seed", v); }},
  };
  for (auto& field : f) {
    if (field.key.rfind("dcca.", 0) == 0) field.present = [&c] { return c.has_dcca_section; };
    if (field.key == "training.alpha" || field.key == "training.warmup_epochs") {
      field.present = [&c] { return c.has_onestep_section || c.variant == Variant::jmvae_onestep; };
    }
  }
  return f;
}

#undef JNF_INT_FIELD
#undef JNF_DOUBLE_FIELD
#undef JNF_BOOL_FIELD
#undef JNF_INTS_FIELD

std::uint64_t hash_keys(const io::Manifest& m, const std::vector<std::string>& prefixes) {
  std::string text;
  for (const auto& [k, v] : m.entries()) {
    for (const auto& p : prefixes) {
      if (k == p || (p.back() == '.' && k.rfind(p, 0) == 0)) {
        text += k + "=" + v + "\n";
        break;
      }
    }
  }
  return fnv1a(text);
}

const std::vector<std::string> kDataKeys{"dataset.", "toy."};

}  // namespace

void ExperimentConfig::apply(const io::Manifest& entries) {
  auto f = fields(*this);
  for (const auto& [key, value] : entries.entries()) {
    auto it = std::find_if(f.begin(), f.end(), [&](const Field& x) { return x.key == key; });
    if (it == f.end()) throw Error(ErrorCode::invalid_config, "unknown config key '" + key + "'");
    it->set(value);
    if (key.rfind("dcca.", 0) == 0) has_dcca_section = true;
    if (key == "training.alpha" || key == "training.warmup_epochs") has_onestep_section = true;
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  io::Manifest m;
  try {
    m = io::Manifest::parse(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  ExperimentConfig cfg;
  cfg.apply(m);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  return parse(text);
}

io::Manifest ExperimentConfig::to_manifest() const {
  io::Manifest m;
  for (const auto& field : fields(const_cast<ExperimentConfig&>(*this))) {
    if (field.present()) m.set(field.key, field.get());
  }
  return m;
}

std::string ExperimentConfig::to_text() const { return to_manifest().to_string(); }

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::invalid_config, what);
  };
  auto positive_widths = [&](const std::vector<int>& w, const std::string& key) {
    for (int x : w) require(x >= 1, key + " entries must be >= 1");
  };
  if (dataset.kind == DatasetKind::toy) {
    try {
      dataset.toy.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::invalid_config, e.what());
    }
    require(dataset.toy.n_samples >= 1, "toy.n_samples must be >= 1");
  } else {
    require(!dataset.path.empty(), "dataset.path is required when dataset.kind=directory");
  }
  require(dataset.n_validation >= 1, "dataset.n_validation must be >= 1");
  require(dataset.n_test >= 1, "dataset.n_test must be >= 1");
  require(latent_dim >= 1, "model.latent_dim must be >= 1");
  positive_widths(encoder_hidden, "joint.encoder_hidden");
  positive_widths(decoder_hidden, "joint.decoder_hidden");
  require(flow.n_blocks >= 0, "flow.n_blocks must be >= 0");
  positive_widths(flow.made_hidden, "flow.hidden_layers");
  positive_widths(flow.encoder_hidden, "flow.encoder_hidden");
  require(flow.scale_clamp > 0, "flow.scale_clamp must be > 0");

  require(has_dcca_section == uses_dcca(),
          uses_dcca() ? "variant jnf_dcca requires a dcca section (e.g. dcca.output_dim)"
                      : std::string("dcca.* keys are only valid for variant jnf_dcca"));
  if (uses_dcca()) {
    require(dcca.output_dim >= 1, "dcca.output_dim must be >= 1");
    if (dcca.d_keep != "elbow") {
      int k = 0;
      try {
        k = to_int("dcca.d_keep", dcca.d_keep);
      } catch (const Error&) {
        throw Error(ErrorCode::invalid_config, "dcca.d_keep must be 'elbow' or a positive integer");
      }
      require(k >= 1, "dcca.d_keep must be >= 1");
      require(k <= dcca.output_dim, "dcca.d_keep must not exceed dcca.output_dim");
    }
    require(dcca.tau_fraction > 0 && dcca.tau_fraction <= 1, "dcca.tau_fraction must lie in (0, 1]");
    require(dcca.regularizer > 0, "dcca.regularizer must be > 0");
    positive_widths(dcca.hidden, "dcca.hidden");
    require(dcca.epochs >= 1, "dcca.epochs must be >= 1");
    require(dcca.batch_size > dcca.output_dim, "dcca.batch_size must exceed dcca.output_dim");
    require(dcca.lr > 0, "dcca.lr must be > 0");
    require(dataset.n_validation > dcca.output_dim, "dataset.n_validation must exceed dcca.output_dim");
  }
  require(!has_onestep_section || variant == Variant::jmvae_onestep,
          "training.alpha / training.warmup_epochs are only valid for variant jmvae_onestep");
  require(training.epochs >= 1, "training.epochs must be >= 1");
  require(training.epochs_step1 >= 0 && training.epochs_step2 >= 0, "step epochs must be >= 0");
  require(step1_epochs() >= 1 && step2_epochs() >= 1, "each training step needs at least one epoch");
  require(training.lr > 0, "training.lr must be > 0");
  require(training.batch_size >= 1, "training.batch_size must be >= 1");
  for (double w : training.reconstruction_weights) require(w > 0, "reconstruction weights must be > 0");
  if (dataset.kind == DatasetKind::toy) {
    require(training.reconstruction_weights.empty() || training.reconstruction_weights.size() == 2,
            "the toy dataset has 2 modalities; training.reconstruction_weights needs 2 entries");
  }
  require(training.clip_norm >= 0, "training.clip_norm must be >= 0");
  require(training.alpha >= 0, "training.alpha must be >= 0");
  require(training.warmup_epochs >= 0, "training.warmup_epochs must be >= 0");
  require(hmc.eps > 0, "hmc.eps must be > 0");
  require(hmc.steps >= 1, "hmc.steps must be >= 1");
  require(hmc.chains >= 1, "hmc.chains must be >= 1");
  require(hmc.burn_in >= 0, "hmc.burn_in must be >= 0");
  require(!hmc.adapt_metric || hmc.burn_in >= 8, "hmc.adapt_metric needs hmc.burn_in >= 8");
  require(hmc.samples_per_chain >= 1, "hmc.samples_per_chain must be >= 1");
  require(hmc.step_jitter >= 0 && hmc.step_jitter < 1, "hmc.step_jitter must lie in [0, 1)");
  require(eval.n_is >= 1, "eval.n_is must be >= 1");
  require(eval.n_mc >= 1, "eval.n_mc must be >= 1");
  require(eval.n_likelihood >= 0, "eval.n_likelihood must be >= 0");
  require(eval.coherence_samples >= 1, "eval.coherence_samples must be >= 1");
  require(eval.fid_samples >= 0, "eval.fid_samples must be >= 0");
  require(eval.vi_bound_pairs >= 0, "eval.vi_bound_pairs must be >= 0");
  require(eval.vi_bound_n_mc >= 1, "eval.vi_bound_n_mc must be >= 1");
  require(eval.poe_sources >= 0, "eval.poe_sources must be >= 0");
  positive_widths(classifier.hidden, "classifier.hidden");
  require(classifier.epochs >= 1, "classifier.epochs must be >= 1");
  require(classifier.batch_size >= 1, "classifier.batch_size must be >= 1");
  require(classifier.lr > 0, "classifier.lr must be > 0");
  require(classifier.accuracy_floor >= 0 && classifier.accuracy_floor <= 1,
          "classifier.accuracy_floor must lie in [0, 1]");
}

int ExperimentConfig::step1_epochs() const {
  return training.epochs_step1 > 0 ? training.epochs_step1 : training.epochs / 2;
}

int ExperimentConfig::step2_epochs() const {
  return training.epochs_step2 > 0 ? training.epochs_step2 : training.epochs - training.epochs / 2;
}

int ExperimentConfig::flow_blocks() const {
  return variant == Variant::jmvae_gaussian || variant == Variant::jmvae_onestep ? 0 : flow.n_blocks;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_text()); }

std::uint64_t ExperimentConfig::data_hash() const { return hash_keys(to_manifest(), kDataKeys); }

std::uint64_t ExperimentConfig::joint_hash() const {
  const auto m = to_manifest();
  if (variant == Variant::jmvae_onestep) {
    // Joint and unimodal encoders are trained together.
    return hash_keys(m, {"dataset.", "toy.", "model.", "joint.", "flow.", "training.", "seed"});
  }
  std::vector<std::string> keys = kDataKeys;
  keys.insert(keys.end(), {"model.latent_dim", "joint.", "training.lr", "training.batch_size",
                           "training.reconstruction_weights", "training.clip_norm", "seed"});
  io::Manifest mm = m;
  mm.set("training.step1_epochs", step1_epochs());
  keys.push_back("training.step1_epochs");
  return hash_keys(mm, keys);
}

std::uint64_t ExperimentConfig::dcca_hash() const {
  if (!uses_dcca()) return 0;
  io::Manifest m = to_manifest();
  if (!dcca.retrain_at_keep) {
    // Post-hoc truncation: the trained encoders do not depend on d_keep.
    m.set("dcca.d_keep", "");
    m.set("dcca.tau_fraction", "");
  }
  std::vector<std::string> keys = kDataKeys;
  keys.insert(keys.end(), {"dcca.", "seed"});
  return hash_keys(m, keys);
}

std::uint64_t ExperimentConfig::posteriors_hash() const {
  io::Manifest m = to_manifest();
  m.set("stage.joint", hex(joint_hash()));
  m.set("stage.dcca", hex(dcca_hash()));
  m.set("stage.flow_blocks", flow_blocks());
  m.set("training.step2_epochs", step2_epochs());
  return hash_keys(m, {"stage.", "model.variant", "flow.", "dcca.d_keep", "dcca.tau_fraction", "training.lr",
                       "training.batch_size", "training.clip_norm", "training.step2_epochs", "seed"});
}

std::uint64_t ExperimentConfig::classifiers_hash() const {
  std::vector<std::string> keys = kDataKeys;
  keys.insert(keys.end(), {"classifier.", "seed"});
  return hash_keys(to_manifest(), keys);
}

}  // namespace jnflow::experiment
