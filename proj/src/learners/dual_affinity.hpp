// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dual_affinity.hpp
 * @brief  Two-encoder model with a bidirectional-GRU affinity decoder.
 *
 * The semantic feature vector is cut into fixed-size chunks; every chunk is
 * encoded by the same semantic MLP and the encodings form the GRU input
 * sequence. The attribute vector is encoded to one H-vector that seeds both
 * GRU directions as
 *
 *   h0 = stop_gradient(attribute_encoding) + offset
 *
 * where `offset` is a decoder-owned trainable [1, H] row (zero at init).
 * The final states of both directions are concatenated to [batch, 2H],
 * mapped by `output_linear` and then by the scoring head.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "learners/gru.hpp"
#include "learners/mlp.hpp"

namespace gremetl::learners {

/// 1-D convolution over the attribute vector followed by a linear map to H.
struct Conv1dSpec {
  std::size_t kernel = 3;
  std::size_t channels = 4;
};

struct DualEncoderSpec {
  MlpSpec semantic_encoder;
  MlpSpec attribute_encoder;
  /// When set, the attribute encoder is a Conv1d stack instead of an MLP;
  /// `attribute_encoder` then only supplies input and output widths.
  std::optional<Conv1dSpec> attribute_conv;
  std::size_t chunk_size = 1;
  bool attribute_trainable = false;

  void validate() const;
  std::size_t attribute_width() const { return attribute_encoder.input_width(); }
  std::size_t hidden_size() const { return attribute_encoder.output_width(); }
};

struct AffinityDecoderSpec {
  std::size_t hidden_size = 8;
  std::size_t output_width = 8;
  std::size_t head_outputs = 1;
  /// Block gradients from the decoder into the attribute encoder through the
  /// initial state. Switching this off is only meant as a negative control.
  bool block_encoder_gradient = true;

  void validate() const;
};

struct DualEncoding {
  std::vector<num::NodeId> semantic_seq;
  num::NodeId attribute_enc;
};

class DualEncoder {
 public:
  DualEncoder() = default;
  DualEncoder(DualEncoderSpec spec, num::ParamStore &store, num::Rng &rng);

  /// `semantic` is [batch, S] with S divisible by chunk_size; `attributes`
  /// is [batch, A]. Throws ShapeError otherwise.
  DualEncoding encode(num::Graph &g, num::NodeId semantic,
                      num::NodeId attributes) const;

  const DualEncoderSpec &spec() const { return spec_; }
  /// Parameter ids owned by the attribute encoder.
  const std::vector<num::ParamId> &attribute_params() const {
    return attribute_params_;
  }

 private:
  num::NodeId encode_attributes(num::Graph &g, num::NodeId attributes) const;

  DualEncoderSpec spec_;
  Mlp semantic_;
  Mlp attribute_mlp_;
  num::ParamId conv_w_ = 0, conv_b_ = 0, proj_w_ = 0, proj_b_ = 0;
  std::vector<num::ParamId> attribute_params_;
};

class AffinityDecoder {
 public:
  AffinityDecoder() = default;
  AffinityDecoder(AffinityDecoderSpec spec, std::size_t input_width,
                  num::ParamStore &store, num::Rng &rng);

  /// Returns [batch, head_outputs]. Throws UsageError on an empty sequence
  /// and ShapeError if `attribute_enc` is not [batch, H].
  num::NodeId decode(num::Graph &g, const std::vector<num::NodeId> &semantic_seq,
                     num::NodeId attribute_enc) const;

  const AffinityDecoderSpec &spec() const { return spec_; }
  num::ParamId offset_param() const { return offset_; }
  num::ParamId output_bias() const { return out_b_; }
  num::ParamId output_weight() const { return out_w_; }
  num::ParamId head_weight() const { return head_w_; }
  num::ParamId head_bias() const { return head_b_; }
  const GruCell &forward_cell() const { return fwd_; }
  const GruCell &backward_cell() const { return bwd_; }

 private:
  AffinityDecoderSpec spec_;
  GruCell fwd_;
  GruCell bwd_;
  num::ParamId offset_ = 0;
  num::ParamId out_w_ = 0, out_b_ = 0;
  num::ParamId head_w_ = 0, head_b_ = 0;
};

struct DualAffinitySpec {
  DualEncoderSpec encoder;
  AffinityDecoderSpec decoder;

  void validate() const;
};

class DualAffinityModel {
 public:
  DualAffinityModel(DualAffinitySpec spec, num::ParamStore &store, num::Rng &rng);

  num::NodeId forward(num::Graph &g, num::NodeId semantic,
                      num::NodeId attributes) const;

  const DualEncoder &encoder() const { return encoder_; }
  const AffinityDecoder &decoder() const { return decoder_; }
  const DualAffinitySpec &spec() const { return spec_; }

 private:
  DualAffinitySpec spec_;
  DualEncoder encoder_;
  AffinityDecoder decoder_;
};

} // namespace gremetl::learners
