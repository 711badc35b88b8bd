// SPDX-License-Identifier: Apache-2.0
/**
 * @file   spec_json.hpp
 * @brief  JSON (de)serialization of model specs. Parsing reports errors as
 *         ValidationError with the field path.
 */
#pragma once

#include <json.hpp>

#include "learners/dual_affinity.hpp"
#include "learners/mlp.hpp"

namespace gremetl::learners {

nlohmann::json to_json(const MlpSpec &spec);
nlohmann::json to_json(const DualEncoderSpec &spec);
nlohmann::json to_json(const AffinityDecoderSpec &spec);
nlohmann::json to_json(const DualAffinitySpec &spec);

MlpSpec mlp_spec_from_json(const nlohmann::json &j, const std::string &path = "");
DualEncoderSpec dual_encoder_spec_from_json(const nlohmann::json &j,
                                            const std::string &path = "");
AffinityDecoderSpec affinity_decoder_spec_from_json(const nlohmann::json &j,
                                                    const std::string &path = "");
DualAffinitySpec dual_affinity_spec_from_json(const nlohmann::json &j,
                                              const std::string &path = "");

} // namespace gremetl::learners
