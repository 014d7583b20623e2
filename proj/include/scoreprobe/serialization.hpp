// Copyright 2026 The scoreprobe Authors
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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "scoreprobe/inverse.hpp"
#include "scoreprobe/nes.hpp"
#include "scoreprobe/subspace.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

using Json = nlohmann::json;

inline constexpr int kInverseModelFormat = 1;
inline constexpr int kOrthogonalSetFormat = 1;

// Throws ConfigError naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                         std::string_view where);

Json to_json(const ExtractorDescriptor& desc);
ExtractorDescriptor extractor_descriptor_from_json(const Json& j);

Json to_json(const NesConfig& cfg);
// Starts from `defaults`; only keys present in j override.
NesConfig nes_config_from_json(const Json& j, NesConfig defaults);

Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j, TrainConfig defaults = {});

Json to_json(const GdConfig& cfg);
GdConfig gd_config_from_json(const Json& j, GdConfig defaults = {});

// Versioned documents.
Json inverse_model_document(const InverseModel& model,
                            const ExtractorDescriptor& source,
                            const TrainConfig* config);
InverseModel inverse_model_from_document(const Json& doc);

Json orthogonal_set_document(const OrthogonalSet& set);

Json step_record_json(const StepRecord& step);

// FNV-1a over the compact dump; printed as 16 hex digits.
std::string content_hash(const Json& j);

}  // namespace scoreprobe
