// SPDX-License-Identifier: Apache-2.0
#include "learners/dual_affinity.hpp"

#include "common/error.hpp"
#include "learners/init.hpp"

namespace gremetl::learners {

void DualEncoderSpec::validate() const {
  semantic_encoder.validate();
  attribute_encoder.validate();
  if (chunk_size == 0)
    throw ValidationError("chunk_size", "must be positive");
  if (semantic_encoder.input_width() != chunk_size)
    throw ValidationError("semantic_encoder.layer_widths[0]",
                          "must equal chunk_size");
  if (attribute_conv) {
    if (attribute_conv->kernel == 0 || attribute_conv->channels == 0)
      throw ValidationError("attribute_conv", "kernel and channels must be positive");
    if (attribute_conv->kernel > attribute_width())
      throw ValidationError("attribute_conv.kernel",
                            "longer than the attribute vector");
  }
}

void AffinityDecoderSpec::validate() const {
  if (hidden_size == 0 || output_width == 0 || head_outputs == 0)
    throw ValidationError("decoder", "sizes must be positive");
}

void DualAffinitySpec::validate() const {
  encoder.validate();
  decoder.validate();
  if (encoder.hidden_size() != decoder.hidden_size)
    throw ValidationError("encoder.attribute_encoder.layer_widths",
                          "output width must equal decoder.hidden_size");
}

// ---------------------------------------------------------------- encoder

DualEncoder::DualEncoder(DualEncoderSpec spec, num::ParamStore &store,
                         num::Rng &rng)
  : spec_(std::move(spec)) {
  spec_.validate();
  semantic_ = Mlp(spec_.semantic_encoder, store, "semantic_encoder", rng);
  if (!spec_.attribute_conv) {
    attribute_mlp_ = Mlp(spec_.attribute_encoder, store, "attribute_encoder", rng);
    attribute_params_ = attribute_mlp_.params();
    return;
  }
  const auto &conv = *spec_.attribute_conv;
  const std::size_t width = spec_.attribute_width();
  const std::size_t positions = width - conv.kernel + 1;
  const std::size_t flat = positions * conv.channels;
  const std::size_t hidden = spec_.hidden_size();

  const std::size_t gc = store.add_group("attribute_encoder.conv");
  conv_w_ = store.add(gc, "attribute_encoder.conv.weight",
                      scaled_uniform(conv.kernel, conv.channels, conv.kernel,
                                     conv.channels, rng));
  conv_b_ = store.add(gc, "attribute_encoder.conv.bias",
                      num::Tensor({1, conv.channels}));
  const std::size_t gp = store.add_group("attribute_encoder.proj");
  proj_w_ = store.add(gp, "attribute_encoder.proj.weight",
                      scaled_uniform(flat, hidden, flat, hidden, rng));
  proj_b_ = store.add(gp, "attribute_encoder.proj.bias", num::Tensor({1, hidden}));
  attribute_params_ = {conv_w_, conv_b_, proj_w_, proj_b_};
}

num::NodeId DualEncoder::encode_attributes(num::Graph &g,
                                           num::NodeId attributes) const {
  if (!spec_.attribute_conv)
    return attribute_mlp_.forward(g, attributes);
  const auto &conv = *spec_.attribute_conv;
  const std::size_t positions = spec_.attribute_width() - conv.kernel + 1;
  std::vector<num::NodeId> maps;
  maps.reserve(positions);
  for (std::size_t p = 0; p < positions; ++p) {
    const num::NodeId window = g.slice(attributes, 1, p, p + conv.kernel);
    maps.push_back(affine(g, window, conv_w_, conv_b_));
  }
  const num::NodeId features =
    activate(g, g.concat(maps, 1), spec_.semantic_encoder.activation);
  return affine(g, features, proj_w_, proj_b_);
}

DualEncoding DualEncoder::encode(num::Graph &g, num::NodeId semantic,
                                 num::NodeId attributes) const {
  const auto &ss = g.shape(semantic);
  const auto &as = g.shape(attributes);
  if (ss.size() != 2 || as.size() != 2 || ss[0] != as[0])
    throw ShapeError("dual_encode: semantic " + num::shape_string(ss) +
                     " and attributes " + num::shape_string(as) +
                     " must be [batch, *] with equal batch");
  if (ss[1] % spec_.chunk_size != 0)
    throw ShapeError("dual_encode: semantic length " + std::to_string(ss[1]) +
                     " is not divisible by chunk_size " +
                     std::to_string(spec_.chunk_size));
  if (as[1] != spec_.attribute_width())
    throw ShapeError("dual_encode: attribute length " + std::to_string(as[1]) +
                     ", expected " + std::to_string(spec_.attribute_width()));

  DualEncoding out;
  const std::size_t chunks = ss[1] / spec_.chunk_size;
  for (std::size_t c = 0; c < chunks; ++c) {
    const num::NodeId piece = g.slice(semantic, 1, c * spec_.chunk_size,
                                      (c + 1) * spec_.chunk_size);
    out.semantic_seq.push_back(semantic_.forward(g, piece));
  }
  out.attribute_enc = encode_attributes(g, attributes);
  if (!spec_.attribute_trainable)
    out.attribute_enc = g.stop_gradient(out.attribute_enc);
  return out;
}

// ---------------------------------------------------------------- decoder

AffinityDecoder::AffinityDecoder(AffinityDecoderSpec spec,
                                 std::size_t input_width,
                                 num::ParamStore &store, num::Rng &rng)
  : spec_(spec) {
  spec_.validate();
  const std::size_t h = spec_.hidden_size;
  fwd_ = GruCell(h, input_width, store, "decoder.gru_forward", rng);
  bwd_ = GruCell(h, input_width, store, "decoder.gru_backward", rng);

  const std::size_t gi = store.add_group("decoder.initial_state");
  offset_ = store.add(gi, "decoder.initial_state.offset", num::Tensor({1, h}));

  const std::size_t go = store.add_group("decoder.output_linear");
  out_w_ = store.add(go, "decoder.output_linear.weight",
                     scaled_uniform(2 * h, spec_.output_width, 2 * h,
                                    spec_.output_width, rng));
  out_b_ = store.add(go, "decoder.output_linear.bias",
                     num::Tensor({1, spec_.output_width}));

  const std::size_t gh = store.add_group("decoder.head");
  head_w_ = store.add(gh, "decoder.head.weight",
                      scaled_uniform(spec_.output_width, spec_.head_outputs,
                                     spec_.output_width, spec_.head_outputs, rng));
  head_b_ = store.add(gh, "decoder.head.bias",
                      num::Tensor({1, spec_.head_outputs}));
}

num::NodeId AffinityDecoder::decode(num::Graph &g,
                                    const std::vector<num::NodeId> &semantic_seq,
                                    num::NodeId attribute_enc) const {
  if (semantic_seq.empty())
    throw UsageError("affinity_decode: empty semantic sequence");
  const auto &as = g.shape(attribute_enc);
  if (as.size() != 2 || as[1] != spec_.hidden_size)
    throw ShapeError("affinity_decode: attribute encoding " +
                     num::shape_string(as) + " must be [batch, " +
                     std::to_string(spec_.hidden_size) + "]");
  const std::size_t batch = as[0];

  num::NodeId seed = spec_.block_encoder_gradient ? g.stop_gradient(attribute_enc)
                                                  : attribute_enc;
  const num::NodeId h0 = g.add(seed, g.repeat_rows(g.param(offset_), batch));

  num::NodeId hf = h0;
  for (auto x : semantic_seq)
    hf = fwd_.step(g, hf, x).state;
  num::NodeId hb = h0;
  for (auto it = semantic_seq.rbegin(); it != semantic_seq.rend(); ++it)
    hb = bwd_.step(g, hb, *it).state;

  const num::NodeId affinity = g.concat({hf, hb}, 1);
  const num::NodeId state = affine(g, affinity, out_w_, out_b_);
  return affine(g, state, head_w_, head_b_);
}

// ---------------------------------------------------------------- model

DualAffinityModel::DualAffinityModel(DualAffinitySpec spec,
                                     num::ParamStore &store, num::Rng &rng)
  : spec_(std::move(spec)) {
  spec_.validate();
  encoder_ = DualEncoder(spec_.encoder, store, rng);
  decoder_ = AffinityDecoder(spec_.decoder,
                             spec_.encoder.semantic_encoder.output_width(),
                             store, rng);
}

num::NodeId DualAffinityModel::forward(num::Graph &g, num::NodeId semantic,
                                       num::NodeId attributes) const {
  const DualEncoding enc = encoder_.encode(g, semantic, attributes);
  return decoder_.decode(g, enc.semantic_seq, enc.attribute_enc);
}

} // namespace gremetl::learners
