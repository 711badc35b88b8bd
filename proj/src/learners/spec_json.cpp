// SPDX-License-Identifier: Apache-2.0
#include "learners/spec_json.hpp"

#include "common/error.hpp"

namespace gremetl::learners {

using nlohmann::json;

namespace {

std::string join(const std::string &path, const std::string &key) {
  return path.empty() ? key : path + "." + key;
}

const json &require(const json &j, const std::string &path, const char *key) {
  if (!j.is_object())
    throw ValidationError(path.empty() ? "<root>" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(join(path, key), "missing field");
  return *it;
}

std::size_t positive(const json &j, const std::string &path) {
  if (!j.is_number_unsigned() || j.get<std::size_t>() == 0)
    throw ValidationError(path, "expected a positive integer");
  return j.get<std::size_t>();
}

bool boolean(const json &j, const std::string &path) {
  if (!j.is_boolean())
    throw ValidationError(path, "expected true or false");
  return j.get<bool>();
}

} // namespace

json to_json(const MlpSpec &spec) {
  return {{"layer_widths", spec.layer_widths},
          {"activation", activation_name(spec.activation)}};
}

json to_json(const DualEncoderSpec &spec) {
  json j = {{"semantic_encoder", to_json(spec.semantic_encoder)},
            {"attribute_encoder", to_json(spec.attribute_encoder)},
            {"chunk_size", spec.chunk_size},
            {"attribute_trainable", spec.attribute_trainable}};
  if (spec.attribute_conv)
    j["attribute_conv"] = {{"kernel", spec.attribute_conv->kernel},
                           {"channels", spec.attribute_conv->channels}};
  return j;
}

json to_json(const AffinityDecoderSpec &spec) {
  return {{"hidden_size", spec.hidden_size},
          {"output_width", spec.output_width},
          {"head_outputs", spec.head_outputs},
          {"block_encoder_gradient", spec.block_encoder_gradient}};
}

json to_json(const DualAffinitySpec &spec) {
  return {{"encoder", to_json(spec.encoder)}, {"decoder", to_json(spec.decoder)}};
}

MlpSpec mlp_spec_from_json(const json &j, const std::string &path) {
  MlpSpec s;
  const json &widths = require(j, path, "layer_widths");
  const std::string wpath = join(path, "layer_widths");
  if (!widths.is_array())
    throw ValidationError(wpath, "expected an array");
  for (std::size_t i = 0; i < widths.size(); ++i)
    s.layer_widths.push_back(
      positive(widths[i], wpath + "[" + std::to_string(i) + "]"));
  const json &act = require(j, path, "activation");
  if (!act.is_string())
    throw ValidationError(join(path, "activation"), "expected a string");
  try {
    s.activation = parse_activation(act.get<std::string>());
  } catch (const ValidationError &e) {
    throw ValidationError(join(path, "activation"), e.what());
  }
  try {
    s.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(join(path, e.field_path()), e.what());
  }
  return s;
}

DualEncoderSpec dual_encoder_spec_from_json(const json &j,
                                            const std::string &path) {
  DualEncoderSpec s;
  s.semantic_encoder = mlp_spec_from_json(require(j, path, "semantic_encoder"),
                                          join(path, "semantic_encoder"));
  s.attribute_encoder = mlp_spec_from_json(require(j, path, "attribute_encoder"),
                                           join(path, "attribute_encoder"));
  s.chunk_size = positive(require(j, path, "chunk_size"), join(path, "chunk_size"));
  s.attribute_trainable = boolean(require(j, path, "attribute_trainable"),
                                  join(path, "attribute_trainable"));
  if (auto it = j.find("attribute_conv"); it != j.end() && !it->is_null()) {
    const std::string cpath = join(path, "attribute_conv");
    Conv1dSpec c;
    c.kernel = positive(require(*it, cpath, "kernel"), join(cpath, "kernel"));
    c.channels = positive(require(*it, cpath, "channels"), join(cpath, "channels"));
    s.attribute_conv = c;
  }
  try {
    s.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(join(path, e.field_path()), e.what());
  }
  return s;
}

AffinityDecoderSpec affinity_decoder_spec_from_json(const json &j,
                                                    const std::string &path) {
  AffinityDecoderSpec s;
  s.hidden_size = positive(require(j, path, "hidden_size"), join(path, "hidden_size"));
  s.output_width =
    positive(require(j, path, "output_width"), join(path, "output_width"));
  s.head_outputs =
    positive(require(j, path, "head_outputs"), join(path, "head_outputs"));
  if (auto it = j.find("block_encoder_gradient"); it != j.end())
    s.block_encoder_gradient = boolean(*it, join(path, "block_encoder_gradient"));
  return s;
}

DualAffinitySpec dual_affinity_spec_from_json(const json &j,
                                              const std::string &path) {
  DualAffinitySpec s;
  s.encoder = dual_encoder_spec_from_json(require(j, path, "encoder"),
                                          join(path, "encoder"));
  s.decoder = affinity_decoder_spec_from_json(require(j, path, "decoder"),
                                              join(path, "decoder"));
  try {
    s.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(join(path, e.field_path()), e.what());
  }
  return s;
}

} // namespace gremetl::learners
