// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Parameter checkpoints: `<stem>.bin` holds every tensor's values as
 *         consecutive 64-bit little-endian IEEE doubles in ParamStore order;
 *         `<stem>.json` is the manifest (name, group, shape, offset).
 */
#pragma once

#include <filesystem>

#include "numcore/params.hpp"

namespace gremetl::learners {

void save_checkpoint(const num::ParamStore &store, const std::filesystem::path &stem);

/// Loads values into an existing store with the same layout. Throws
/// IoError on unreadable files and ShapeError on layout mismatch.
void load_checkpoint(num::ParamStore &store, const std::filesystem::path &stem);

} // namespace gremetl::learners
